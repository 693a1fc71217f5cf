// Parse a small posts table with a few broken rows, then intern account URLs.
//
// Run with `cargo run --example ingest_tables`.

use pubdyn::ingest::{parse_comments, parse_posts, write_quarantine, TableFormat};
use pubdyn::intern::ReferenceTable;

const POSTS: &str = "#\tmessage_id\tauthor_id\tcreated
1\t100\t7\t1357000000
2\t101\t7\t1357000060
3\t102\tseven\t1357000120
4\t100\t8\t1357000180
5\t103\t8
";

const COMMENTS: &str = "1\t200\t9\t1357000030\t100
2\t201\t7\t1357000090\t200
3\t202\t9\t1357000100\t202
";

fn main() {
    let format = TableFormat::tsv();
    let (posts, report) = parse_posts(POSTS.as_bytes(), &format).expect("in-memory input");
    println!("posts: {} accepted, {} quarantined", report.rows_accepted, report.rows_quarantined);
    for (reason, n) in &report.quarantine_reasons {
        println!("  {reason}: {n}");
    }
    let mut sidecar = Vec::new();
    write_quarantine(&mut sidecar, &report, &format).unwrap();
    print!("quarantine sidecar:\n{}", String::from_utf8_lossy(&sidecar));

    let (comments, report) = parse_comments(COMMENTS.as_bytes(), &format).expect("in-memory input");
    println!("comments: {} accepted, {:?}", comments.len(), report.quarantine_reasons);
    assert_eq!(posts.len(), 2);

    let mut accounts = ReferenceTable::new();
    for url in ["https://social.example/a", "https://social.example/b", "https://social.example/a"] {
        let id = accounts.intern(url).unwrap();
        println!("{url} -> {id}");
    }
    assert_eq!(accounts.len(), 2);
}
