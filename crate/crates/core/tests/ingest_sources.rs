use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crm_core::{ingest, Granularity, IngestError, SourceKind, SourceSpec};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// Creates a repository in `dir` from a fast-import stream.
fn import_repo(dir: &Path, stream: &[u8]) {
    let git = |args: &[&str]| Command::new("git").arg("-C").arg(dir).args(args).status().unwrap();
    assert!(git(&["init", "-q"]).success());
    let mut child = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(["fast-import", "--quiet"])
        .stdin(Stdio::piped())
        .spawn()
        .unwrap();
    std::io::Write::write_all(child.stdin.as_mut().unwrap(), stream).unwrap();
    assert!(child.wait().unwrap().success());
    assert!(git(&["symbolic-ref", "HEAD", "refs/heads/main"]).success());
}

#[test]
fn git_fixture_three_commits() {
    let dir = tempfile::tempdir().unwrap();
    import_repo(dir.path(), &std::fs::read(fixtures().join("git/history.fi")).unwrap());

    let spec = SourceSpec::new(SourceKind::Git, dir.path()).with_target("doc.tex");
    let revs = ingest(&spec).unwrap();
    assert_eq!(revs.iter().map(|r| r.index).collect::<Vec<_>>(), [1, 2, 3]);
    assert_eq!(revs.iter().map(|r| r.author.as_str()).collect::<Vec<_>>(), ["Ada", "Bo", "Ada"]);
    assert_eq!(revs[0].comment, "revision 1");
    assert!(revs.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
    assert_eq!(revs[0].content.first().unwrap().as_str(), "\\section{Intro}");

    // Same immutable source, same answer.
    assert_eq!(ingest(&spec).unwrap(), revs);
}

#[test]
fn git_commit_without_target_is_skipped() {
    let stream = b"blob\nmark :1\ndata 4\none\n\
commit refs/heads/main\nmark :2\ncommitter A <a@x> 1000000000 +0000\ndata 2\nc1\nM 100644 :1 doc.txt\n\n\
commit refs/heads/main\nmark :3\ncommitter A <a@x> 1000000100 +0000\ndata 2\nc2\nfrom :2\nD doc.txt\n\n\
blob\nmark :4\ndata 4\ntwo\n\
commit refs/heads/main\nmark :5\ncommitter B <b@x> 1000000200 +0000\ndata 2\nc3\nfrom :3\nM 100644 :4 doc.txt\n\n";
    let dir = tempfile::tempdir().unwrap();
    import_repo(dir.path(), stream);

    let revs = ingest(&SourceSpec::new(SourceKind::Git, dir.path()).with_target("doc.txt")).unwrap();
    assert_eq!(revs.len(), 2);
    assert_eq!(revs[1].index, 2);
    assert_eq!(revs[1].content.first().unwrap().as_str(), "two");

    let missing = SourceSpec::new(SourceKind::Git, dir.path()).with_target("nothing.txt");
    assert!(matches!(ingest(&missing), Err(IngestError::EmptyHistory)));
}

#[test]
fn git_rejects_non_repository() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SourceSpec::new(SourceKind::Git, dir.path()).with_target("doc.txt");
    assert!(matches!(ingest(&spec), Err(IngestError::Git(_))));
}

#[test]
fn snapshot_directory() {
    let spec = SourceSpec::new(SourceKind::Files, fixtures().join("synthetic"));
    let revs = ingest(&spec).unwrap();
    assert_eq!(revs.iter().map(|r| r.content.len()).collect::<Vec<_>>(), [20, 28, 25, 28]);

    let lines = ingest(&spec.with_granularity(Granularity::Line)).unwrap();
    assert_eq!(lines[0].content.len(), 2);
}

#[test]
fn mediawiki_fixture() {
    let spec = SourceSpec::new(SourceKind::MediawikiXml, fixtures().join("mediawiki/synthetic.xml"));
    let revs = ingest(&spec).unwrap();
    assert_eq!(revs.iter().map(|r| r.author.as_str()).collect::<Vec<_>>(), ["A", "B", "C", "B"]);
    assert_eq!(revs[3].comment, "mention the monks");

    let files = ingest(&SourceSpec::new(SourceKind::Files, fixtures().join("synthetic"))).unwrap();
    for (a, b) in revs.iter().zip(&files) {
        assert_eq!(a.content, b.content);
    }
}
