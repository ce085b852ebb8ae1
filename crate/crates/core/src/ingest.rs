//! Revision sources: a file's first-parent history in a git repository, a
//! directory of snapshot files, or a MediaWiki `Special:Export` dump.

use std::collections::HashMap;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use chrono::{DateTime, FixedOffset, Utc};
use log::warn;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use crate::document::{tokenize, Granularity, Revision, SectionFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Git,
    Files,
    MediawikiXml,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub location: PathBuf,
    /// File path inside the repository (git only).
    pub target: Option<PathBuf>,
    pub granularity: Granularity,
    pub format: SectionFormat,
}

impl SourceSpec {
    pub fn new(kind: SourceKind, location: impl Into<PathBuf>) -> Self {
        SourceSpec {
            kind,
            location: location.into(),
            target: None,
            granularity: Granularity::Word,
            format: SectionFormat::None,
        }
    }

    pub fn with_target(mut self, target: impl Into<PathBuf>) -> Self {
        self.target = Some(target.into());
        self
    }

    pub fn with_granularity(mut self, granularity: Granularity) -> Self {
        self.granularity = granularity;
        self
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{0} does not exist")]
    NotFound(PathBuf),
    #[error("a git source needs a target path inside the repository")]
    MissingTarget,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} is not valid UTF-8")]
    NotUtf8 { path: PathBuf },
    #[error("git: {0}")]
    Git(String),
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("bad timestamp `{value}` in revision {revision}")]
    Timestamp { revision: usize, value: String },
    #[error("history is empty")]
    EmptyHistory,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IngestError + '_ {
    move |source| IngestError::Io { path: path.to_owned(), source }
}

/// Reads the revisions described by `spec`, oldest first, indexed `1..=R`.
pub fn ingest(spec: &SourceSpec) -> Result<Vec<Revision>, IngestError> {
    if !spec.location.exists() {
        return Err(IngestError::NotFound(spec.location.clone()));
    }
    let raw = match spec.kind {
        SourceKind::Files => read_snapshot_dir(&spec.location)?,
        SourceKind::Git => {
            let target = spec.target.as_deref().ok_or(IngestError::MissingTarget)?;
            read_git_history(&spec.location, target)?
        }
        SourceKind::MediawikiXml => {
            let file = fs::File::open(&spec.location).map_err(io_err(&spec.location))?;
            read_mediawiki(BufReader::new(file))?
        }
    };
    if raw.is_empty() {
        return Err(IngestError::EmptyHistory);
    }
    if spec.kind != SourceKind::Files {
        for (k, w) in raw.windows(2).enumerate() {
            if w[1].timestamp < w[0].timestamp {
                warn!("revision {} is older than revision {}; keeping history order", k + 2, k + 1);
            }
        }
    }
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(k, r)| Revision {
            index: k + 1,
            author: r.author,
            timestamp: r.timestamp,
            comment: r.comment,
            content: tokenize(&r.text, spec.granularity),
        })
        .collect())
}

/// A revision before tokenization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRevision {
    pub author: String,
    pub timestamp: DateTime<FixedOffset>,
    pub comment: String,
    pub text: String,
}

fn read_snapshot_dir(dir: &Path) -> Result<Vec<RawRevision>, IngestError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let hidden = entry.file_name().to_string_lossy().starts_with('.');
        if !hidden && entry.file_type().map_err(io_err(dir))?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();

    let owners = OwnerNames::load();
    files
        .iter()
        .map(|path| {
            let bytes = fs::read(path).map_err(io_err(path))?;
            let text = String::from_utf8(bytes).map_err(|_| IngestError::NotUtf8 { path: path.clone() })?;
            let meta = fs::metadata(path).map_err(io_err(path))?;
            let timestamp = meta
                .modified()
                .map(|t| DateTime::<Utc>::from(t).fixed_offset())
                .unwrap_or(DateTime::UNIX_EPOCH.fixed_offset());
            Ok(RawRevision { author: owners.owner_of(&meta), timestamp, comment: String::new(), text })
        })
        .collect()
}

/// uid → login name, read from `/etc/passwd`.
struct OwnerNames(HashMap<u32, String>);

impl OwnerNames {
    fn load() -> Self {
        let map = fs::read_to_string("/etc/passwd")
            .map(|text| {
                text.lines()
                    .filter_map(|line| {
                        let mut f = line.split(':');
                        let name = f.next()?;
                        let uid = f.nth(1)?.parse().ok()?;
                        Some((uid, name.to_string()))
                    })
                    .collect()
            })
            .unwrap_or_default();
        OwnerNames(map)
    }

    #[cfg(unix)]
    fn owner_of(&self, meta: &fs::Metadata) -> String {
        use std::os::unix::fs::MetadataExt;
        self.0.get(&meta.uid()).cloned().unwrap_or_else(|| "unknown".into())
    }

    #[cfg(not(unix))]
    fn owner_of(&self, _meta: &fs::Metadata) -> String {
        "unknown".into()
    }
}

fn git(repo: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C").arg(repo).env("GIT_CONFIG_NOSYSTEM", "1").env("LC_ALL", "C");
    cmd
}

fn run_git(cmd: &mut Command) -> Result<Vec<u8>, IngestError> {
    let out = cmd.output().map_err(|e| IngestError::Git(format!("cannot run git: {e}")))?;
    if !out.status.success() {
        return Err(IngestError::Git(String::from_utf8_lossy(&out.stderr).trim().to_string()));
    }
    Ok(out.stdout)
}

/// First-parent commits touching `target`, oldest first, with the file
/// content at each commit. Commits where the file is missing are skipped.
fn read_git_history(repo: &Path, target: &Path) -> Result<Vec<RawRevision>, IngestError> {
    let target = target.to_string_lossy().replace('\\', "/");
    let log = run_git(
        git(repo)
            .args(["log", "--first-parent", "--reverse", "--no-color"])
            .arg("--format=%H%x1f%an%x1f%cI%x1f%s%x1e")
            .arg("--")
            .arg(&target),
    )?;
    let log = String::from_utf8_lossy(&log);
    let mut commits = Vec::new();
    for record in log.split('\x1e').map(str::trim).filter(|r| !r.is_empty()) {
        let f: Vec<&str> = record.split('\x1f').collect();
        let [hash, author, time, subject] = f[..] else {
            return Err(IngestError::Git(format!("unexpected log record `{record}`")));
        };
        let timestamp = DateTime::parse_from_rfc3339(time)
            .map_err(|_| IngestError::Timestamp { revision: commits.len() + 1, value: time.into() })?;
        commits.push((hash.to_string(), author.to_string(), timestamp, subject.to_string()));
    }
    if commits.is_empty() {
        return Ok(Vec::new());
    }

    let requests: String = commits.iter().map(|(h, ..)| format!("{h}:{target}\n")).collect();
    let blobs = cat_file_batch(repo, requests)?;
    let mut out = Vec::new();
    for ((hash, author, timestamp, comment), blob) in commits.into_iter().zip(blobs) {
        match blob {
            Some(bytes) => out.push(RawRevision {
                author,
                timestamp,
                comment,
                text: String::from_utf8_lossy(&bytes).into_owned(),
            }),
            None => warn!("{target} is missing in commit {hash}; skipping it"),
        }
    }
    Ok(out)
}

fn cat_file_batch(repo: &Path, requests: String) -> Result<Vec<Option<Vec<u8>>>, IngestError> {
    let mut child = git(repo)
        .args(["cat-file", "--batch"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| IngestError::Git(format!("cannot run git: {e}")))?;
    let mut stdin = child.stdin.take().expect("piped");
    let writer = std::thread::spawn(move || stdin.write_all(requests.as_bytes()));

    let mut reader = BufReader::new(child.stdout.take().expect("piped"));
    let mut blobs = Vec::new();
    let mut header = String::new();
    loop {
        header.clear();
        if reader.read_line(&mut header).map_err(|e| IngestError::Git(e.to_string()))? == 0 {
            break;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        match fields[..] {
            [_, "blob", size] => {
                let size: usize =
                    size.parse().map_err(|_| IngestError::Git(format!("bad header `{header}`")))?;
                let mut body = vec![0; size + 1];
                reader.read_exact(&mut body).map_err(|e| IngestError::Git(e.to_string()))?;
                body.pop();
                blobs.push(Some(body));
            }
            [_, "missing"] | [_, "ambiguous"] => blobs.push(None),
            [_, kind, size] => {
                // A tree or other object where a file was expected.
                let size: usize =
                    size.parse().map_err(|_| IngestError::Git(format!("bad header `{header}`")))?;
                let mut body = vec![0; size + 1];
                reader.read_exact(&mut body).map_err(|e| IngestError::Git(e.to_string()))?;
                warn!("expected a blob, found a {kind}");
                blobs.push(None);
            }
            _ => return Err(IngestError::Git(format!("unexpected cat-file output `{}`", header.trim()))),
        }
    }
    let _ = writer.join();
    let status = child.wait().map_err(|e| IngestError::Git(e.to_string()))?;
    if !status.success() {
        return Err(IngestError::Git(format!("cat-file exited with {status}")));
    }
    Ok(blobs)
}

#[derive(Default)]
struct PendingRevision {
    timestamp: String,
    author: Option<String>,
    comment: String,
    text: String,
    text_deleted: bool,
}

fn has_deleted_attr(e: &BytesStart<'_>) -> bool {
    e.attributes().flatten().any(|a| a.key.as_ref() == b"deleted")
}

/// Parses the revisions of the first page in a MediaWiki export.
///
/// Revisions whose text was deleted or suppressed are skipped; a hidden
/// contributor becomes `unknown`.
pub fn read_mediawiki<R: BufRead>(input: R) -> Result<Vec<RawRevision>, IngestError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(false);
    let mut buf = Vec::new();
    let mut path: Vec<Vec<u8>> = Vec::new();
    let mut pages = 0;
    let mut current: Option<PendingRevision> = None;
    let mut out = Vec::new();

    let xml_err = |reader: &Reader<R>, message: String| IngestError::Xml {
        offset: reader.error_position().max(reader.buffer_position()),
        message,
    };

    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| xml_err(&reader, e.to_string()))?;
        match event {
            Event::Start(e) => {
                let name = e.local_name().as_ref().to_vec();
                match name.as_slice() {
                    b"page" => {
                        pages += 1;
                        if pages == 2 {
                            warn!("export contains more than one page; using the first");
                        }
                    }
                    b"revision" if pages == 1 => current = Some(PendingRevision::default()),
                    b"text" if pages == 1 => {
                        if let Some(r) = current.as_mut() {
                            r.text_deleted |= has_deleted_attr(&e);
                        }
                    }
                    b"contributor" if pages == 1 => {
                        if let (Some(r), true) = (current.as_mut(), has_deleted_attr(&e)) {
                            r.author = Some("unknown".into());
                        }
                    }
                    _ => {}
                }
                path.push(name);
            }
            Event::Empty(e) => {
                if pages == 1 {
                    if let Some(r) = current.as_mut() {
                        match e.local_name().as_ref() {
                            b"text" => r.text_deleted |= has_deleted_attr(&e),
                            b"contributor" => r.author = Some("unknown".into()),
                            _ => {}
                        }
                    }
                }
            }
            Event::End(e) => {
                path.pop();
                if pages == 1 && e.local_name().as_ref() == b"revision" {
                    if let Some(r) = current.take() {
                        let index = out.len() + 1;
                        if r.text_deleted {
                            warn!("skipping deleted revision at {}", r.timestamp);
                            continue;
                        }
                        let timestamp = DateTime::parse_from_rfc3339(r.timestamp.trim()).map_err(|_| {
                            IngestError::Timestamp { revision: index, value: r.timestamp.clone() }
                        })?;
                        out.push(RawRevision {
                            author: r.author.unwrap_or_else(|| "unknown".into()),
                            timestamp,
                            comment: r.comment,
                            text: r.text,
                        });
                    }
                }
            }
            Event::Text(t) => {
                if let Some(r) = current.as_mut() {
                    let text = t.unescape().map_err(|e| xml_err(&reader, e.to_string()))?;
                    append_field(r, &path, &text);
                }
            }
            Event::CData(t) => {
                if let Some(r) = current.as_mut() {
                    let text = t.decode().map_err(|e| xml_err(&reader, e.to_string()))?;
                    append_field(r, &path, &text);
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !path.is_empty() {
        return Err(xml_err(&reader, "unexpected end of document".into()));
    }
    Ok(out)
}

fn append_field(r: &mut PendingRevision, path: &[Vec<u8>], text: &str) {
    let n = path.len();
    let leaf = path.last().map(Vec::as_slice);
    let parent = n.checked_sub(2).map(|k| path[k].as_slice());
    match (parent, leaf) {
        (Some(b"revision"), Some(b"timestamp")) => r.timestamp.push_str(text),
        (Some(b"revision"), Some(b"comment")) => r.comment.push_str(text),
        (Some(b"revision"), Some(b"text")) => r.text.push_str(text),
        (Some(b"contributor"), Some(b"username" | b"ip")) => {
            r.author.get_or_insert_with(String::new).push_str(text)
        }
        _ => {}
    }
}
