//! Read-only access to local git repositories through the standard git tools.
//!
//! Everything here shells out to git (`rev-list`, `cat-file --batch`, `log`,
//! `ls-tree`, `diff-tree | patch-id`) rather than reimplementing the object
//! store: the extraction has to be bit-exact with what the plumbing reports.
//! The binary is `git` on PATH, overridable with the `METAMAINT_GIT` env var.
//!
//! All operations are read-only and safe to run concurrently; each call owns
//! its own subprocess, so batched reads never interleave on a shared channel.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};
use thiserror::Error;

/// Record and field separators used in `git log` format strings.
const RS: char = '\u{1e}';
const US: char = '\u{1f}';

const ZERO_ID: &str = "0000000000000000000000000000000000000000";

#[derive(Debug, Error)]
pub enum GitError {
    #[error("repository {repo_id} is unreadable: {reason}")]
    RepoUnreadable { repo_id: String, reason: String },
    #[error("object {id} not found in repository {repo_id}")]
    ObjectNotFound { repo_id: String, id: String },
    #[error("no main branch candidate in repository {repo_id}")]
    NoBranch { repo_id: String },
    #[error("repository {repo_id} has no commits")]
    EmptyRepo { repo_id: String },
    #[error("invalid object id {0:?}")]
    InvalidId(String),
    #[error("git {args} failed in {repo_id}: {stderr}")]
    Subprocess {
        repo_id: String,
        args: String,
        stderr: String,
    },
    #[error("unexpected git output in {repo_id}: {detail}")]
    Parse { repo_id: String, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 40-hex git object name of a blob.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlobId(String);

impl BlobId {
    pub fn new(id: impl Into<String>) -> Result<Self, GitError> {
        let id = id.into();
        if id.len() == 40 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(BlobId(id))
        } else {
            Err(GitError::InvalidId(id))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// SHA-1 of `"blob <len>\0" + content`, i.e. the id git assigns to the content.
pub fn hash_blob(content: &[u8]) -> BlobId {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    BlobId(hex::encode(h.finalize()))
}

mod hex {
    pub fn encode(bytes: impl AsRef<[u8]>) -> String {
        bytes
            .as_ref()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// 40-hex digest of one commit's diff restricted to one path, with git's
/// stable patch-identity semantics: equal across cherry-picks, insensitive to
/// author, date, message, and hunk offsets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatchId(String);

impl PatchId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitMeta {
    pub commit_id: String,
    pub author_name: String,
    pub author_email: String,
    pub committer_name: String,
    pub committer_email: String,
    pub author_time: i64,
    pub commit_time: i64,
    pub message: String,
}

/// One commit of a path's history, with the blob the path holds afterwards.
///
/// `blob_after` is `None` when git's raw diff does not state the resulting
/// blob (merge commits); resolve those with [`RepoHandle::blob_at`].
#[derive(Debug, Clone)]
pub struct PathChange {
    pub meta: CommitMeta,
    pub first_parent: Option<String>,
    pub blob_after: Option<Option<BlobId>>,
}

/// A local repository known to be readable.
#[derive(Debug, Clone)]
pub struct RepoHandle {
    repo_id: String,
    local_path: PathBuf,
}

impl RepoHandle {
    /// Opens `local_path`, verifying there is a readable SHA-1 object database.
    pub fn open(repo_id: impl Into<String>, local_path: impl Into<PathBuf>) -> Result<Self, GitError> {
        let repo = RepoHandle {
            repo_id: repo_id.into(),
            local_path: local_path.into(),
        };
        let gitdir = repo.run(&["rev-parse", "--git-dir"]).map_err(|e| {
            GitError::RepoUnreadable {
                repo_id: repo.repo_id.clone(),
                reason: e.to_string(),
            }
        })?;
        if gitdir.is_empty() {
            return Err(GitError::RepoUnreadable {
                repo_id: repo.repo_id.clone(),
                reason: "no git directory".into(),
            });
        }
        let format = repo.run(&["rev-parse", "--show-object-format"])?;
        let format = String::from_utf8_lossy(&format);
        if format.trim() != "sha1" {
            return Err(GitError::RepoUnreadable {
                repo_id: repo.repo_id.clone(),
                reason: format!("unsupported object format {}", format.trim()),
            });
        }
        Ok(repo)
    }

    pub fn repo_id(&self) -> &str {
        &self.repo_id
    }

    pub fn local_path(&self) -> &Path {
        &self.local_path
    }

    fn git_command(&self) -> Command {
        let program = std::env::var_os("METAMAINT_GIT").unwrap_or_else(|| "git".into());
        let mut cmd = Command::new(program);
        cmd.arg("-C").arg(&self.local_path);
        cmd.env("GIT_OPTIONAL_LOCKS", "0");
        cmd
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>, GitError> {
        let out = self
            .git_command()
            .args(args)
            .stdin(Stdio::null())
            .output()?;
        if !out.status.success() {
            return Err(GitError::Subprocess {
                repo_id: self.repo_id.clone(),
                args: args.join(" "),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        Ok(out.stdout)
    }

    /// Like [`run`] but a nonzero exit is `Ok(None)` rather than an error.
    fn run_optional(&self, args: &[&str]) -> Result<Option<Vec<u8>>, GitError> {
        let out = self
            .git_command()
            .args(args)
            .stdin(Stdio::null())
            .output()?;
        if out.status.success() {
            Ok(Some(out.stdout))
        } else {
            Ok(None)
        }
    }

    /// Every (blob, path) pair reachable from any ref, deduplicated.
    ///
    /// Derived from the raw diffs of all reachable commits (`log --all -m
    /// --raw`): a blob at a path in any reachable tree was introduced there by
    /// some commit, so scanning every introduction yields every pair —
    /// including the same blob under several names, which a plain
    /// `rev-list --objects` would list only once.
    pub fn enumerate_blobs(&self) -> Result<BTreeSet<(BlobId, String)>, GitError> {
        let mut pairs = BTreeSet::new();
        let heads = self.run(&["rev-list", "--all", "--max-count=1"])?;
        if heads.is_empty() {
            return Ok(pairs);
        }
        let out = self.run(&[
            "-c",
            "core.quotePath=false",
            "log",
            "--all",
            "-m",
            "--raw",
            "--no-abbrev",
            "--no-renames",
            "--format=",
        ])?;
        for line in String::from_utf8_lossy(&out).lines() {
            if let Some((blob, path)) = parse_raw_line(line) {
                pairs.insert((blob, path.to_string()));
            }
        }
        Ok(pairs)
    }

    /// Exact stored content of a blob.
    pub fn read_blob(&self, blob: &BlobId) -> Result<Vec<u8>, GitError> {
        let mut contents = self.read_blobs(std::slice::from_ref(blob))?;
        Ok(contents.pop().expect("one reply per requested id"))
    }

    /// Batched blob reads over one `cat-file --batch` channel, in input order.
    pub fn read_blobs(&self, blobs: &[BlobId]) -> Result<Vec<Vec<u8>>, GitError> {
        if blobs.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = self
            .git_command()
            .args(["cat-file", "--batch"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");

        let request: String = blobs.iter().map(|b| format!("{b}\n")).collect();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(request.as_bytes());
            // drop closes the pipe and lets cat-file finish
        });

        let mut reader = BufReader::new(stdout);
        let mut contents = Vec::with_capacity(blobs.len());
        let result = (|| {
            for blob in blobs {
                contents.push(self.read_batch_reply(&mut reader, blob)?);
            }
            Ok(())
        })();
        writer.join().ok();
        reap(&mut child);
        result.map(|()| contents)
    }

    fn read_batch_reply(
        &self,
        reader: &mut impl BufRead,
        blob: &BlobId,
    ) -> Result<Vec<u8>, GitError> {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let mut fields = header.split_whitespace();
        let (id, kind) = (fields.next().unwrap_or(""), fields.next().unwrap_or(""));
        if kind == "missing" || kind != "blob" {
            return Err(GitError::ObjectNotFound {
                repo_id: self.repo_id.clone(),
                id: id.to_string(),
            });
        }
        let len: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| GitError::Parse {
                repo_id: self.repo_id.clone(),
                detail: format!("bad cat-file header {header:?} for {blob}"),
            })?;
        let mut content = vec![0u8; len];
        reader.read_exact(&mut content)?;
        let mut newline = [0u8; 1];
        reader.read_exact(&mut newline)?;
        Ok(content)
    }

    /// The branch statuses are judged against: the override if given, else the
    /// symbolic HEAD target, else the first existing of master/main.
    pub fn resolve_main_branch(&self, override_branch: Option<&str>) -> Result<String, GitError> {
        if let Some(name) = override_branch {
            return Ok(name.to_string());
        }
        if let Some(out) = self.run_optional(&["symbolic-ref", "--quiet", "--short", "HEAD"])? {
            let name = String::from_utf8_lossy(&out).trim().to_string();
            if !name.is_empty() && self.branch_exists(&name)? {
                return Ok(name);
            }
        }
        for candidate in ["master", "main"] {
            if self.branch_exists(candidate)? {
                return Ok(candidate.to_string());
            }
        }
        Err(GitError::NoBranch {
            repo_id: self.repo_id.clone(),
        })
    }

    fn branch_exists(&self, name: &str) -> Result<bool, GitError> {
        let r = format!("refs/heads/{name}");
        Ok(self
            .run_optional(&["show-ref", "--verify", "--quiet", &r])?
            .is_some())
    }

    /// Commits on the branch's history that change the blob at `path`, oldest
    /// first. Renames are never followed: a path's history ends where the file
    /// was moved away.
    pub fn path_history(&self, branch: &str, path: &str) -> Result<Vec<CommitMeta>, GitError> {
        Ok(self
            .path_changes(branch, path)?
            .into_iter()
            .map(|c| c.meta)
            .collect())
    }

    /// [`path_history`] plus per-commit raw-diff details.
    pub fn path_changes(&self, branch: &str, path: &str) -> Result<Vec<PathChange>, GitError> {
        let format = format!("--format={RS}%H{US}%P{US}%an{US}%ae{US}%cn{US}%ce{US}%at{US}%ct{US}%B{US}");
        let out = self.run(&[
            "-c",
            "core.quotePath=false",
            "log",
            branch,
            "--full-history",
            "--no-renames",
            "--topo-order",
            "--reverse",
            "--raw",
            "--no-abbrev",
            &format,
            "--",
            path,
        ])?;
        let text = String::from_utf8_lossy(&out);
        let mut changes = Vec::new();
        for record in text.split(RS).skip(1) {
            changes.push(self.parse_change_record(record)?);
        }
        Ok(changes)
    }

    fn parse_change_record(&self, record: &str) -> Result<PathChange, GitError> {
        let fields: Vec<&str> = record.splitn(10, US).collect();
        if fields.len() != 10 {
            return Err(GitError::Parse {
                repo_id: self.repo_id.clone(),
                detail: format!("log record with {} fields", fields.len()),
            });
        }
        let meta = CommitMeta {
            commit_id: fields[0].to_string(),
            author_name: fields[2].to_string(),
            author_email: fields[3].to_string(),
            committer_name: fields[4].to_string(),
            committer_email: fields[5].to_string(),
            author_time: parse_time(fields[6], &self.repo_id)?,
            commit_time: parse_time(fields[7], &self.repo_id)?,
            message: fields[8].to_string(),
        };
        let first_parent = fields[1].split_whitespace().next().map(str::to_string);
        let blob_after = fields[9].lines().find_map(|line| {
            parse_raw_line_status(line).map(|(blob, _status)| blob)
        });
        Ok(PathChange {
            meta,
            first_parent,
            blob_after,
        })
    }

    /// Blob at `path` in the tip tree of `branch` (or any committish), if any.
    pub fn blob_at(&self, committish: &str, path: &str) -> Result<Option<BlobId>, GitError> {
        let out = self.run(&["ls-tree", committish, "--", path])?;
        let text = String::from_utf8_lossy(&out);
        let Some(line) = text.lines().next() else {
            return Ok(None);
        };
        let mut fields = line.split_whitespace();
        let (_mode, kind, id) = (
            fields.next().unwrap_or(""),
            fields.next().unwrap_or(""),
            fields.next().unwrap_or(""),
        );
        if kind == "blob" {
            Ok(Some(BlobId::new(id)?))
        } else {
            Ok(None)
        }
    }

    /// Blob at `path` in the branch tip, or `None` when absent.
    pub fn head_blob(&self, branch: &str, path: &str) -> Result<Option<BlobId>, GitError> {
        self.blob_at(branch, path)
    }

    /// Patch identity of `commit`'s diff restricted to `path`; `None` when the
    /// commit does not touch the path. Merge commits diff against their first
    /// parent.
    pub fn patch_identity(
        &self,
        commit: &CommitMeta,
        path: &str,
    ) -> Result<Option<PatchId>, GitError> {
        let parent = self.first_parent(&commit.commit_id)?;
        self.patch_identity_with_parent(&commit.commit_id, parent.as_deref(), Some(path))
    }

    /// Patch identity of the whole commit (no path restriction).
    pub fn commit_patch_identity(
        &self,
        commit: &CommitMeta,
    ) -> Result<Option<PatchId>, GitError> {
        let parent = self.first_parent(&commit.commit_id)?;
        self.patch_identity_with_parent(&commit.commit_id, parent.as_deref(), None)
    }

    fn first_parent(&self, commit_id: &str) -> Result<Option<String>, GitError> {
        let out = self.run(&["rev-list", "--parents", "--max-count=1", commit_id])?;
        let text = String::from_utf8_lossy(&out);
        Ok(text.split_whitespace().nth(1).map(str::to_string))
    }

    /// `git diff-tree -p | git patch-id --stable` with a known first parent,
    /// saving the parent lookup when the caller already walked the history.
    pub fn patch_identity_with_parent(
        &self,
        commit_id: &str,
        first_parent: Option<&str>,
        path: Option<&str>,
    ) -> Result<Option<PatchId>, GitError> {
        let mut args: Vec<&str> = vec!["diff-tree", "-p"];
        match first_parent {
            Some(parent) => {
                args.push(parent);
                args.push(commit_id);
            }
            None => {
                args.push("--root");
                args.push(commit_id);
            }
        }
        if let Some(p) = path {
            args.push("--");
            args.push(p);
        }

        let mut diff = self
            .git_command()
            .args(&args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let diff_out = diff.stdout.take().expect("piped stdout");
        let mut patch_id = self
            .git_command()
            .args(["patch-id", "--stable"])
            .stdin(Stdio::from(diff_out))
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let out = patch_id
            .stdout
            .take()
            .map(|mut s| {
                let mut buf = String::new();
                s.read_to_string(&mut buf).map(|_| buf)
            })
            .transpose()?;
        reap(&mut diff);
        reap(&mut patch_id);

        let Some(text) = out else { return Ok(None) };
        match text.split_whitespace().next() {
            Some(id) if id != ZERO_ID => Ok(Some(PatchId(BlobId::new(id)?.0))),
            _ => Ok(None),
        }
    }

    /// Newest commit time over all refs.
    pub fn last_commit_time(&self) -> Result<i64, GitError> {
        // rev-list's default order is commit-date descending, so the first
        // commit listed carries the maximum commit time.
        let out = self.run(&["rev-list", "--all", "--max-count=1", "--format=%ct"])?;
        let text = String::from_utf8_lossy(&out);
        text.lines()
            .find(|l| !l.starts_with("commit "))
            .map(|l| parse_time(l.trim(), &self.repo_id))
            .transpose()?
            .ok_or_else(|| GitError::EmptyRepo {
                repo_id: self.repo_id.clone(),
            })
    }

    /// Commit id at the tip of `branch`.
    pub fn head_commit_id(&self, branch: &str) -> Result<String, GitError> {
        let spec = format!("{branch}^{{commit}}");
        let out = self.run(&["rev-parse", "--verify", &spec])?;
        Ok(String::from_utf8_lossy(&out).trim().to_string())
    }

    /// (commit time, committer email) of every commit reachable from any ref.
    pub fn commit_stats(&self) -> Result<Vec<(i64, String)>, GitError> {
        let format = format!("--format=%ct{US}%ce");
        let out = self.run(&["rev-list", "--all", &format])?;
        let text = String::from_utf8_lossy(&out);
        let mut stats = Vec::new();
        for line in text.lines() {
            if line.starts_with("commit ") || line.is_empty() {
                continue;
            }
            let (time, email) = line.split_once(US).ok_or_else(|| GitError::Parse {
                repo_id: self.repo_id.clone(),
                detail: format!("bad rev-list line {line:?}"),
            })?;
            stats.push((parse_time(time, &self.repo_id)?, email.to_string()));
        }
        Ok(stats)
    }
}

fn parse_time(s: &str, repo_id: &str) -> Result<i64, GitError> {
    s.parse().map_err(|_| GitError::Parse {
        repo_id: repo_id.to_string(),
        detail: format!("bad timestamp {s:?}"),
    })
}

fn reap(child: &mut Child) {
    // Kill first so a child still blocked on a full pipe cannot stall wait().
    let _ = child.kill();
    let _ = child.wait();
}

/// Parses one `--raw` diff line into the blob the path holds afterwards.
/// Returns `None` for lines that are not raw diff entries. Deletions yield
/// `Some(None)`; submodule (gitlink) entries are skipped entirely.
fn parse_raw_line_status(line: &str) -> Option<Option<BlobId>> {
    let rest = line.strip_prefix(':')?;
    let mut fields = rest.split_whitespace();
    let _old_mode = fields.next()?;
    let new_mode = fields.next()?;
    let _old_id = fields.next()?;
    let new_id = fields.next()?;
    let status = fields.next()?;
    if status.starts_with('D') || new_id == ZERO_ID {
        return Some(None);
    }
    match new_mode {
        "100644" | "100755" | "120000" => Some(BlobId::new(new_id).ok().map(Some)?),
        _ => None, // gitlinks and anything exotic
    }
}

/// Parses one `--raw` diff line into an added/modified (blob, path) pair.
fn parse_raw_line(line: &str) -> Option<(BlobId, &str)> {
    let blob = parse_raw_line_status(line)??;
    let (_, path) = line.split_once('\t')?;
    Some((blob, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_known_ids() {
        // the well-known empty blob
        assert_eq!(
            hash_blob(b"").as_str(),
            "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"
        );
        // `echo 'int x;' | git hash-object --stdin`
        assert_eq!(
            hash_blob(b"int x;\n").as_str(),
            "6d1a0d47b7f73eacb962f3711df06b21ed11f7ca"
        );
    }

    #[test]
    fn blob_id_validation() {
        assert!(BlobId::new("e69de29bb2d1d6434b8b29ae775ad8c2e48c5391").is_ok());
        assert!(BlobId::new("E69DE29BB2D1D6434B8B29AE775AD8C2E48C5391").is_err());
        assert!(BlobId::new("short").is_err());
    }

    #[test]
    fn raw_line_parsing() {
        let add = ":000000 100644 0000000000000000000000000000000000000000 6d1a0d47b7f73eacb962f3711df06b21ed11f7ca A\ta.c";
        let (blob, path) = parse_raw_line(add).unwrap();
        assert_eq!(blob.as_str(), "6d1a0d47b7f73eacb962f3711df06b21ed11f7ca");
        assert_eq!(path, "a.c");

        let del = ":100644 000000 6d1a0d47b7f73eacb962f3711df06b21ed11f7ca 0000000000000000000000000000000000000000 D\ta.c";
        assert_eq!(parse_raw_line(del), None);
        assert_eq!(parse_raw_line_status(del), Some(None));

        let gitlink = ":000000 160000 0000000000000000000000000000000000000000 6d1a0d47b7f73eacb962f3711df06b21ed11f7ca A\tsub";
        assert_eq!(parse_raw_line(gitlink), None);

        assert_eq!(parse_raw_line("not a raw line"), None);
    }
}
