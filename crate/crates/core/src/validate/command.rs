//! Running a project's build and test commands in a scratch copy.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use tempfile::TempDir;
use wait_timeout::ChildExt;
use walkdir::WalkDir;

use super::patch::{apply_patchset, check_sites, HunkSite};
use super::{HarnessError, Outcome, PatchSet, SuiteReport, TestHarness, TestId};

/// Environment variable holding the comma-separated ids of tests the test
/// command should not run.
pub const SKIP_TESTS_ENV: &str = "MENDKIT_SKIP_TESTS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandSpec {
    pub build: Option<String>,
    pub test: String,
    /// Relative to the project root.
    pub workdir: PathBuf,
    pub env: BTreeMap<String, String>,
    /// Limit for build and test together.
    pub timeout: Duration,
}

/// Copies a project into a private scratch directory and runs its commands
/// there, rewriting the hunk files before every run.
pub struct CommandHarness {
    sandbox: TempDir,
    pristine: BTreeMap<String, String>,
    sites: Vec<HunkSite>,
    spec: CommandSpec,
    known_tests: Mutex<BTreeSet<TestId>>,
}

struct Finished {
    timed_out: bool,
    success: bool,
    lines: Vec<String>,
}

fn sandbox_err(what: &str, path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Sandbox(format!("{what} {}: {e}", path.display()))
}

fn copy_tree(from: &Path, to: &Path) -> Result<(), HarnessError> {
    for entry in WalkDir::new(from) {
        let entry = entry.map_err(|e| sandbox_err("cannot walk", from, e))?;
        let rel = entry.path().strip_prefix(from).expect("walk stays under root");
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(|e| sandbox_err("cannot create", &dest, e))?;
        } else {
            fs::copy(entry.path(), &dest).map_err(|e| sandbox_err("cannot copy", entry.path(), e))?;
        }
    }
    Ok(())
}

/// Parses `<test-id> <pass|fail|error>`; other lines are ignored.
fn parse_line(line: &str) -> Option<(TestId, Outcome)> {
    let mut words = line.split_whitespace();
    let (id, verdict) = (words.next()?, words.next()?);
    if words.next().is_some() {
        return None;
    }
    let outcome = match verdict {
        "pass" => Outcome::Pass,
        "fail" => Outcome::Fail,
        "error" => Outcome::Error,
        _ => return None,
    };
    Some((id.to_string(), outcome))
}

impl CommandHarness {
    /// `sandbox_parent` defaults to the system temporary directory.
    pub fn new(
        project_root: &Path,
        sites: Vec<HunkSite>,
        spec: CommandSpec,
        sandbox_parent: Option<&Path>,
    ) -> Result<Self, HarnessError> {
        let parent = sandbox_parent.map(Path::to_path_buf).unwrap_or_else(std::env::temp_dir);
        fs::create_dir_all(&parent).map_err(|e| sandbox_err("cannot create", &parent, e))?;
        let sandbox = tempfile::Builder::new()
            .prefix("mendkit-")
            .tempdir_in(&parent)
            .map_err(|e| sandbox_err("cannot create sandbox in", &parent, e))?;
        copy_tree(project_root, sandbox.path())?;
        let mut pristine = BTreeMap::new();
        for site in &sites {
            if !pristine.contains_key(&site.id.path) {
                let path = project_root.join(&site.id.path);
                let text = fs::read_to_string(&path).map_err(|e| sandbox_err("cannot read", &path, e))?;
                pristine.insert(site.id.path.clone(), text);
            }
        }
        check_sites(&pristine, &sites)?;
        Ok(CommandHarness { sandbox, pristine, sites, spec, known_tests: Mutex::new(BTreeSet::new()) })
    }

    pub fn sandbox_path(&self) -> &Path {
        self.sandbox.path()
    }

    pub fn sources(&self) -> &BTreeMap<String, String> {
        &self.pristine
    }

    fn write_files(&self, files: &BTreeMap<String, String>) -> Result<(), HarnessError> {
        for (rel, text) in files {
            let path = self.sandbox.path().join(rel);
            fs::write(&path, text).map_err(|e| sandbox_err("cannot write", &path, e))?;
        }
        Ok(())
    }

    fn execute(&self, command: &str, skip: &BTreeSet<TestId>, deadline: Instant) -> Result<Finished, HarnessError> {
        let cwd = self.sandbox.path().join(&self.spec.workdir);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .current_dir(&cwd)
            .envs(&self.spec.env)
            .env(SKIP_TESTS_ENV, skip.iter().cloned().collect::<Vec<_>>().join(","))
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .process_group(0)
            .spawn()
            .map_err(|e| sandbox_err("cannot start command in", &cwd, e))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let lines = Arc::new(Mutex::new(Vec::new()));
        let reader = {
            let lines = Arc::clone(&lines);
            thread::spawn(move || {
                for line in BufReader::new(stdout).lines().map_while(Result::ok) {
                    lines.lock().unwrap().push(line);
                }
            })
        };
        let remaining = deadline.saturating_duration_since(Instant::now());
        let waited = child.wait_timeout(remaining).map_err(|e| sandbox_err("cannot wait in", &cwd, e))?;
        let (timed_out, success) = match waited {
            Some(status) => (false, status.success()),
            None => {
                // SAFETY: kill(2) on the child's own process group.
                unsafe { libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL) };
                let _ = child.wait();
                (true, false)
            }
        };
        // Descendants that outlive the shell still hold the pipe open.
        // SAFETY: as above.
        unsafe { libc::kill(-(child.id() as libc::pid_t), libc::SIGKILL) };
        let _ = reader.join();
        let lines = std::mem::take(&mut *lines.lock().unwrap());
        Ok(Finished { timed_out, success, lines })
    }
}

impl TestHarness for CommandHarness {
    fn run(&self, patchset: &PatchSet, skip: &BTreeSet<TestId>) -> Result<SuiteReport, HarnessError> {
        let started = Instant::now();
        let deadline = started + self.spec.timeout;
        let files = apply_patchset(&self.pristine, &self.sites, patchset)?;
        self.write_files(&files)?;

        if let Some(build) = &self.spec.build {
            let done = self.execute(build, skip, deadline)?;
            if !done.success {
                return Ok(SuiteReport::not_compiled(started.elapsed()));
            }
        }
        let done = self.execute(&self.spec.test, skip, deadline)?;
        let mut outcomes: BTreeMap<TestId, Outcome> = done.lines.iter().filter_map(|l| parse_line(l)).collect();
        if done.timed_out {
            for id in self.known_tests.lock().unwrap().iter() {
                outcomes.entry(id.clone()).or_insert(Outcome::Timeout);
            }
            if outcomes.is_empty() {
                // Nothing known yet: a timeout is still a timeout, not a
                // build failure.
                outcomes.insert("<suite>".into(), Outcome::Timeout);
            }
        } else if !done.success && outcomes.is_empty() {
            return Ok(SuiteReport::not_compiled(started.elapsed()));
        }
        outcomes.retain(|id, _| !skip.contains(id));
        if !done.timed_out {
            self.known_tests.lock().unwrap().extend(outcomes.keys().cloned());
        }
        Ok(SuiteReport { compiled: true, outcomes, wall_time: started.elapsed() })
    }
}
