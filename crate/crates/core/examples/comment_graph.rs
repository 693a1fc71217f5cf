// Resolve reply chains to their root posts and build the commentator to
// post-author relation graph.

use pubdyn::corpus::{ContainerKind, Corpus};
use pubdyn::ingest::{CommentRecord, PostRecord};

fn post(id: u64, author: u64, t: i64) -> PostRecord {
    PostRecord { message_id: id, author_id: author, created: t }
}

fn comment(id: u64, author: u64, t: i64, parent: u64) -> CommentRecord {
    CommentRecord { message_id: id, author_id: author, created: t, parent_id: parent }
}

fn main() {
    let posts = vec![post(1, 10, 0), post(2, 11, 50)];
    let comments = vec![
        comment(100, 12, 5, 1),
        comment(101, 10, 9, 100),   // reply to a reply, still under post 1
        comment(102, 12, 60, 2),
        comment(103, 12, 61, 2),
        comment(104, 13, 70, 999),  // parent never seen
        comment(105, 13, 71, 106),  // 105 and 106 point at each other
        comment(106, 13, 72, 105),
    ];
    let corpus = Corpus::build(posts, comments);

    for r in corpus.resolved() {
        println!("comment {} -> post {} at depth {}", r.comment.message_id, r.root_post_id, r.depth);
    }
    println!("unresolved: {:?}", corpus.quarantine_counts());

    let graph = corpus.commentator_author_graph();
    println!("{} distinct commenter/author pairs, {} comments", graph.edges.len(), graph.total_multiplicity());
    let mut out = Vec::new();
    graph.write_edge_list(&mut out, '\t').unwrap();
    print!("{}", String::from_utf8_lossy(&out));

    let hierarchy = corpus.hierarchy(1);
    let messages = hierarchy.iter().filter(|(_, n)| n.kind == ContainerKind::Message).count();
    println!("hierarchy: {} nodes, {messages} messages", hierarchy.len());
}
