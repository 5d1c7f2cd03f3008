//! Planted-signal corpus generator shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use styloprof::corpus::{AgeGroup, Corpus, Gender, Post, Task, UserRecord};
use styloprof::util::rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Signal {
    /// Own class token in `leak` of the posts, another class's token in the rest.
    OpposingToken,
    /// Own class token in `leak` of the posts, nothing class-specific otherwise.
    Token,
    /// Class-specific topic words in `leak` of the posts. `shift` swaps the
    /// topic vocabulary for an unseen one.
    Topic { shift: bool },
    /// Users of every class but the first write chatspeak in `leak` of their
    /// posts; topic words carry no class information.
    Chatspeak { shift: bool },
}

#[derive(Clone, Debug)]
pub struct Planted {
    pub n_users: usize,
    pub posts: (usize, usize),
    pub n_classes: usize,
    pub leak: f64,
    pub signal: Signal,
    pub shuffle_labels: bool,
    pub seed: u64,
}

impl Planted {
    pub fn new(n_users: usize, signal: Signal, seed: u64) -> Self {
        Self {
            n_users,
            posts: (15, 25),
            n_classes: 2,
            leak: 0.7,
            signal,
            shuffle_labels: false,
            seed,
        }
    }
}

const SIGNAL_TOKENS: [&str; 4] = ["quokka", "wombat", "gecko", "yak"];
const TOPICS: [&str; 20] = [
    "hockey", "guitar", "garden", "poker", "soccer", "tennis", "chess", "movies", "coffee", "travel", "pizza",
    "piano", "kayak", "darts", "rugby", "salsa", "comics", "sushi", "cricket", "fossil",
];
const SHIFTED: [&str; 20] = [
    "opera", "pottery", "ballet", "karate", "jazz", "yoga", "archery", "origami", "zumba", "vinyl", "bonsai",
    "tarot", "polka", "judo", "banjo", "haiku", "quilt", "falcon", "lichen", "cactus",
];
const CHATSPEAK: [&str; 4] = ["soooo", "!!!", ":)", "WOW"];
const SYLLABLES: [&str; 12] = ["ba", "de", "fi", "lo", "mu", "ne", "pa", "ri", "so", "tu", "ve", "mi"];

fn filler(r: &mut impl Rng) -> String {
    let n = r.gen_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(r).unwrap()).collect()
}

pub fn task_for(n_classes: usize) -> Task {
    if n_classes == 2 {
        Task::Gender
    } else {
        Task::Age
    }
}

pub fn planted(cfg: &Planted) -> Corpus {
    let mut r = rng(cfg.seed);
    let task = task_for(cfg.n_classes);
    let mut labels: Vec<usize> = (0..cfg.n_users).map(|i| i % cfg.n_classes).collect();
    let mut posts = Vec::new();
    for (u, &y) in labels.iter().enumerate() {
        let n = r.gen_range(cfg.posts.0..=cfg.posts.1);
        let n_leak = (cfg.leak * n as f64).round() as usize;
        let mut leaks: Vec<bool> = (0..n).map(|i| i < n_leak).collect();
        leaks.shuffle(&mut r);
        for (i, leak) in leaks.into_iter().enumerate() {
            let mut words: Vec<String> = (0..r.gen_range(6..=10)).map(|_| filler(&mut r)).collect();
            let mut extra: Option<String> = None;
            match cfg.signal {
                Signal::OpposingToken => {
                    let other = (y + r.gen_range(1..cfg.n_classes)) % cfg.n_classes;
                    extra = Some(SIGNAL_TOKENS[if leak { y } else { other }].to_string());
                }
                Signal::Token => {
                    if leak {
                        extra = Some(SIGNAL_TOKENS[y].to_string());
                    }
                }
                Signal::Topic { shift } => {
                    let vocab = if shift { &SHIFTED } else { &TOPICS };
                    let c = if leak { y } else { r.gen_range(0..cfg.n_classes) };
                    extra = Some(vocab[c * 5 + r.gen_range(0..5)].to_string());
                }
                Signal::Chatspeak { shift } => {
                    let vocab = if shift { &SHIFTED } else { &TOPICS };
                    words.push(vocab[r.gen_range(0..cfg.n_classes * 5)].to_string());
                    if leak && y > 0 {
                        extra = Some(CHATSPEAK.choose(&mut r).unwrap().to_string());
                    }
                }
            }
            if let Some(e) = extra {
                let at = r.gen_range(0..=words.len());
                words.insert(at, e);
            }
            posts.push(Post {
                post_id: format!("p{u:04}_{i:03}"),
                user_id: format!("u{u:04}"),
                text: words.join(" "),
                forum: None,
                timestamp: None,
            });
        }
    }
    if cfg.shuffle_labels {
        labels.shuffle(&mut r);
    }
    let users = labels.iter().enumerate().map(|(u, &y)| {
        let mut rec = UserRecord::new(format!("u{u:04}"));
        match task {
            Task::Gender => rec.gender = Some(Gender::ALL[y]),
            Task::Age => rec.age_group = Some(AgeGroup::ALL[y]),
        }
        rec
    });
    Corpus::new(posts, users, Some(task)).unwrap()
}
