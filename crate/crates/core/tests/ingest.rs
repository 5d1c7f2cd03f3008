use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde_json::json;
use styloprof::ingest::{
    build_corpus, canonicalize_latest_first, merge_corpora, BbcodeJsonAdapter, PageKind,
    PageRecord, Snapshot, SnapshotArchive,
};
use styloprof::util::rng;

const DATES: [&str; 3] = ["2014-01-05", "2014-06-12", "2015-02-20"];

#[test]
fn canonicalization_matches_group_by_oracle() {
    let mut r = rng(5);
    let mut archive = SnapshotArchive::new("fx");
    let mut flat = Vec::new();
    for date in DATES {
        let mut pages = Vec::new();
        for k in 0..50 {
            if r.gen_bool(0.3) {
                continue;
            }
            let key = format!("t:{k}");
            pages.push(PageRecord {
                page_key: key.clone(),
                kind: PageKind::Thread,
                snapshot_date: date.into(),
                payload: json!(format!("{key}@{date}")),
            });
            flat.push((key, date.to_string()));
        }
        archive.snapshots.push(Snapshot {
            date: date.into(),
            pages,
        });
    }
    // shuffle snapshot order; the result must not depend on it
    archive.snapshots.swap(0, 2);

    let mut oracle: BTreeMap<String, String> = BTreeMap::new();
    for (k, d) in flat {
        let e = oracle.entry(k).or_default();
        if d > *e {
            *e = d;
        }
    }
    let got = canonicalize_latest_first(&archive).unwrap();
    assert_eq!(got.len(), oracle.len());
    for p in &got {
        assert_eq!(oracle[&p.page_key], p.snapshot_date);
        assert_eq!(p.payload, json!(format!("{}@{}", p.page_key, p.snapshot_date)));
    }
}

// community sizes scaled down by 1000, rounded, at least one
const COMMUNITIES: [(&str, usize, usize); 35] = [
    ("SilkRoad2", 882_418, 26_163),
    ("SilkRoad", 846_077, 52_383),
    ("Evolution", 509_225, 33_743),
    ("Abraxas", 276_300, 1_607),
    ("Agora", 84_914, 6_153),
    ("BlackMarketReloaded", 80_467, 7_006),
    ("Nucleus", 65_175, 9_478),
    ("TheHub", 58_642, 7_337),
    ("Pandora", 49_023, 8_729),
    ("BlackBank", 32_817, 2_381),
    ("TheMajesticGarden", 26_121, 1_858),
    ("Utopia", 14_458, 4_392),
    ("Diabolus", 11_456, 2_151),
    ("Kingdom", 10_285, 856),
    ("ProjectBlackFlag", 6_131, 330),
    ("CannabisRoad2", 5_842, 2_139),
    ("CannabisRoad3", 4_905, 1_903),
    ("Bungee54", 3_325, 1_510),
    ("Panacea", 2_241, 520),
    ("TorBazaar", 2_205, 902),
    ("TheRealDeal", 1_049, 115),
    ("Hydra", 937, 276),
    ("Kiss", 933, 145),
    ("Andromeda", 894, 1_601),
    ("OutlawMarket", 689, 2_007),
    ("Revolver", 660, 85),
    ("TorEscrow", 490, 294),
    ("DarkBay", 332, 484),
    ("Dogeroad", 300, 118),
    ("DarknetHeroes", 190, 793),
    ("Havana", 181, 77),
    ("Tom", 144, 4_120),
    ("GreyRoad", 43, 24),
    ("Tortuga", 37, 7),
    ("MrNiceGuy", 25, 6),
];

fn scaled(n: usize) -> usize {
    ((n as f64 / 1000.0).round() as usize).max(1)
}

struct Truth {
    posts: usize,
    users: usize,
}

/// Writes a three-snapshot archive for one forum and returns the counts a
/// correct ingestion must report.
fn write_forum(root: &Path, name: &str, n_posts: usize, n_profiles: usize, seed: u64) -> Truth {
    let mut r = rng(seed);
    let dir = root.join(name);
    let mut snaps: BTreeMap<&str, Vec<String>> = DATES.iter().map(|d| (*d, Vec::new())).collect();
    let mut place = |line_for: &dyn Fn(&str) -> String, r: &mut rand_chacha::ChaCha8Rng| {
        // always present in at least one snapshot; older versions may differ
        let newest = r.gen_range(0..DATES.len());
        for (i, d) in DATES.iter().enumerate() {
            if i == newest || (i < newest && r.gen_bool(0.5)) {
                snaps.get_mut(d).unwrap().push(line_for(d));
            }
        }
    };
    for u in 0..n_profiles {
        let line = |_: &str| {
            json!({"page_key": format!("u:{u}"), "kind": "profile",
                   "payload": {"user_key": format!("k{u}"), "display_name": format!("user{u}")}})
            .to_string()
        };
        place(&line, &mut r);
    }
    let n_guests = (n_posts / 7).max(1);
    let mut authors_seen = std::collections::BTreeSet::new();
    let per_page = 5;
    let mut post_no = 0;
    let mut page_no = 0;
    while post_no < n_posts {
        let mut posts = Vec::new();
        for _ in 0..per_page.min(n_posts - post_no) {
            let author = if r.gen_bool(0.8) {
                format!("user{}", r.gen_range(0..n_profiles))
            } else {
                format!("guest{}", r.gen_range(0..n_guests))
            };
            authors_seen.insert(author.clone());
            let body = if r.gen_bool(0.3) {
                format!("[quote]earlier words[/quote] reply {post_no}")
            } else {
                format!("message {post_no}")
            };
            posts.push(json!({"post_id": format!("p{post_no}"), "author": author, "body": body}));
            post_no += 1;
        }
        let current = json!({"page_key": format!("t:{page_no}"), "kind": "thread",
            "payload": {"thread_id": format!("{page_no}"), "posts": posts}});
        // stale copies carry a truncated post list
        let stale = {
            let mut v = current.clone();
            v["payload"]["posts"].as_array_mut().unwrap().truncate(1);
            v
        };
        let newest = r.gen_range(0..DATES.len());
        for (i, d) in DATES.iter().enumerate() {
            if i == newest {
                snaps.get_mut(d).unwrap().push(current.to_string());
            } else if i < newest && r.gen_bool(0.5) {
                snaps.get_mut(d).unwrap().push(stale.to_string());
            }
        }
        page_no += 1;
    }
    for (d, lines) in snaps {
        let sdir = dir.join(d);
        fs::create_dir_all(&sdir).unwrap();
        let mut f = fs::File::create(sdir.join("pages.jsonl")).unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
    }
    let guests = authors_seen.iter().filter(|a| a.starts_with("guest")).count();
    Truth {
        posts: n_posts,
        users: n_profiles + guests,
    }
}

#[test]
fn thirty_five_forum_recount() {
    let tmp = tempfile::tempdir().unwrap();
    let mut parts = Vec::new();
    let mut total_posts = 0;
    for (i, (name, posts, users)) in COMMUNITIES.iter().enumerate() {
        let truth = write_forum(tmp.path(), name, scaled(*posts), scaled(*users), i as u64);
        let archive = SnapshotArchive::load(&tmp.path().join(name), None).unwrap();
        let (c, report) = build_corpus(&archive, &BbcodeJsonAdapter).unwrap();
        assert_eq!(c.posts().len(), truth.posts, "{name} posts");
        assert_eq!(c.n_users(), truth.users, "{name} users");
        assert_eq!(report.skipped_pages, 0);
        assert!(c.posts().iter().all(|p| !p.text.contains("earlier words")));
        total_posts += truth.posts;
        parts.push(c);
    }
    let all = merge_corpora(parts).unwrap();
    assert_eq!(all.posts().len(), total_posts);
    assert_eq!(scaled(882_418), 882);
}

#[test]
fn ingestion_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    write_forum(tmp.path(), "Kiss", 40, 10, 99);
    let a = SnapshotArchive::load(&tmp.path().join("Kiss"), None).unwrap();
    let (c1, _) = build_corpus(&a, &BbcodeJsonAdapter).unwrap();
    let (c2, _) = build_corpus(&a, &BbcodeJsonAdapter).unwrap();
    assert_eq!(c1, c2);
}
