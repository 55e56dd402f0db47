use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::corpus::{CorpusStore, FormulaId, Proof};
use crate::fol::{print_tptp, AnnotatedFormula, Role};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Status {
    Solved,
    Unsolved,
    Timeout,
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::Unsolved => "unsolved",
            Status::Timeout => "timeout",
            Status::Error => "error",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solved" => Ok(Status::Solved),
            "unsolved" => Ok(Status::Unsolved),
            "timeout" => Ok(Status::Timeout),
            "error" => Ok(Status::Error),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

/// Outcome of one proof attempt. `used` is non-empty only when solved
/// and is a subset of the offered premises.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub used: Vec<FormulaId>,
    pub seconds: f64,
    /// Raw prover output or diagnostics, kept for audit.
    pub output: String,
}

impl Verdict {
    pub fn unsolved() -> Self {
        Self {
            status: Status::Unsolved,
            used: Vec::new(),
            seconds: 0.0,
            output: String::new(),
        }
    }

    pub fn error(diagnostics: impl Into<String>) -> Self {
        Self {
            status: Status::Error,
            used: Vec::new(),
            seconds: 0.0,
            output: diagnostics.into(),
        }
    }
}

/// A conjecture with the premises offered for it, in ascending id order.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub store: &'a CorpusStore,
    pub theorem: FormulaId,
    pub premises: &'a [FormulaId],
}

impl Problem<'_> {
    /// The TPTP problem: premises as axioms in chronological order, then
    /// the theorem as conjecture.
    pub fn to_tptp(&self) -> String {
        let mut out = String::new();
        for &p in self.premises {
            let f = self.store.formula(p);
            let axiom = AnnotatedFormula::new(f.name.clone(), Role::Axiom, f.body.clone());
            out.push_str(&print_tptp(&axiom));
            out.push('\n');
        }
        let t = self.store.formula(self.theorem);
        let conj = AnnotatedFormula::new(t.name.clone(), Role::Conjecture, t.body.clone());
        out.push_str(&print_tptp(&conj));
        out.push('\n');
        out
    }
}

pub trait ProverAdapter: Send + Sync {
    fn name(&self) -> &str;
    fn prove(&self, problem: &Problem<'_>, time_limit: f64) -> Verdict;
}

/// Answers from known ground-truth proofs: solved iff some proof is
/// contained in the offered premises; the smallest such proof is used.
#[derive(Debug, Clone, Default)]
pub struct SyntheticOracle {
    proofs: HashMap<FormulaId, Vec<Proof>>,
}

impl SyntheticOracle {
    pub fn new(proofs: impl IntoIterator<Item = (FormulaId, Proof)>) -> Self {
        let mut map: HashMap<FormulaId, Vec<Proof>> = HashMap::new();
        for (t, mut p) in proofs {
            p.sort_unstable();
            p.dedup();
            map.entry(t).or_default().push(p);
        }
        Self { proofs: map }
    }

    /// Uses every proof stored in `truth` as ground truth.
    pub fn from_store(truth: &CorpusStore) -> Self {
        Self::new(
            truth
                .records()
                .flat_map(|r| r.proofs.iter().map(move |p| (r.theorem, p.clone()))),
        )
    }

    pub fn provable_count(&self) -> usize {
        self.proofs.len()
    }
}

impl ProverAdapter for SyntheticOracle {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn prove(&self, problem: &Problem<'_>, _time_limit: f64) -> Verdict {
        let offered: BTreeSet<FormulaId> = problem.premises.iter().copied().collect();
        let best = self
            .proofs
            .get(&problem.theorem)
            .into_iter()
            .flatten()
            .filter(|p| p.iter().all(|q| offered.contains(q)))
            .min_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        match best {
            Some(p) => Verdict {
                status: Status::Solved,
                used: p.clone(),
                seconds: 0.0,
                output: String::new(),
            },
            None => Verdict::unsolved(),
        }
    }
}

/// Maps an SZS status word to a verdict status.
pub fn szs_status(word: &str) -> Status {
    match word {
        "Theorem" | "Unsatisfiable" => Status::Solved,
        "CounterSatisfiable" | "Satisfiable" | "GaveUp" => Status::Unsolved,
        "ResourceOut" | "Timeout" => Status::Timeout,
        _ => Status::Error,
    }
}

/// Reads the first `SZS status` line and, when present, the `fof(` names
/// inside the `SZS output start` / `SZS output end` block.
pub fn parse_szs(output: &str) -> (Status, Option<Vec<String>>) {
    let status = output
        .lines()
        .find_map(|l| {
            let rest = &l[l.find("SZS status ")? + "SZS status ".len()..];
            Some(rest.split_whitespace().next().unwrap_or(""))
        })
        .map(szs_status)
        .unwrap_or(Status::Error);
    let mut names = Vec::new();
    let mut inside = false;
    let mut saw_block = false;
    for line in output.lines() {
        if line.contains("SZS output start") {
            inside = true;
            saw_block = true;
            continue;
        }
        if line.contains("SZS output end") {
            inside = false;
            continue;
        }
        if inside {
            let mut rest = line;
            while let Some(i) = rest.find("fof(") {
                rest = &rest[i + 4..];
                let name: String = rest
                    .trim_start()
                    .chars()
                    .take_while(|c| c.is_alphanumeric() || *c == '_')
                    .collect();
                if !name.is_empty() {
                    names.push(name);
                }
            }
        }
    }
    (status, saw_block.then_some(names))
}

/// Runs a shell command per problem. The template's `{file}` is replaced
/// by the problem path and `{timelimit}` by the limit in whole seconds.
#[derive(Debug, Clone)]
pub struct ExternalProver {
    pub name: String,
    pub template: String,
    /// Directory for problem files; the system temporary directory if unset.
    pub scratch: Option<PathBuf>,
    /// Extra wall time allowed beyond the limit before the process is killed.
    pub grace: Duration,
}

impl ExternalProver {
    pub fn new(name: impl Into<String>, template: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            template: template.into(),
            scratch: None,
            grace: Duration::from_secs(1),
        }
    }

    fn run(&self, problem: &Problem<'_>, time_limit: f64) -> Result<Verdict, String> {
        let mut file = match &self.scratch {
            Some(dir) => tempfile::Builder::new().suffix(".p").tempfile_in(dir),
            None => tempfile::Builder::new().suffix(".p").tempfile(),
        }
        .map_err(|e| format!("cannot create problem file: {e}"))?;
        file.write_all(problem.to_tptp().as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| format!("cannot write problem file: {e}"))?;
        let command = self
            .template
            .replace("{file}", &file.path().display().to_string())
            .replace("{timelimit}", &format!("{}", time_limit.ceil().max(1.0) as u64));
        let start = Instant::now();
        let mut child = Command::new("sh");
        child.arg("-c").arg(&command);
        // own process group, so a timeout kills the whole pipeline
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut child, 0);
        let mut child = child
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("cannot run `{command}`: {e}"))?;
        let drain = |mut pipe: Box<dyn Read + Send>| {
            std::thread::spawn(move || {
                let mut buf = Vec::new();
                let _ = pipe.read_to_end(&mut buf);
                String::from_utf8_lossy(&buf).into_owned()
            })
        };
        let out = drain(Box::new(child.stdout.take().expect("piped stdout")));
        let err = drain(Box::new(child.stderr.take().expect("piped stderr")));
        let deadline = Duration::from_secs_f64(time_limit.max(0.0)) + self.grace;
        let mut killed = false;
        loop {
            match child.try_wait() {
                Ok(Some(_)) => break,
                Ok(None) if start.elapsed() >= deadline => {
                    kill_group(child.id());
                    let _ = child.kill();
                    let _ = child.wait();
                    killed = true;
                    break;
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(format!("waiting for `{command}`: {e}")),
            }
        }
        let seconds = start.elapsed().as_secs_f64();
        let mut output = out.join().unwrap_or_default();
        let stderr = err.join().unwrap_or_default();
        if !stderr.is_empty() {
            output.push_str(&stderr);
        }
        if killed {
            return Ok(Verdict {
                status: Status::Timeout,
                used: Vec::new(),
                seconds,
                output,
            });
        }
        let (status, names) = parse_szs(&output);
        let used = if status == Status::Solved {
            let by_name: HashMap<&str, FormulaId> = problem
                .premises
                .iter()
                .map(|&p| (problem.store.name(p), p))
                .collect();
            match names {
                Some(ns) => {
                    let set: BTreeSet<FormulaId> =
                        ns.iter().filter_map(|n| by_name.get(n.as_str()).copied()).collect();
                    set.into_iter().collect()
                }
                None => problem.premises.to_vec(),
            }
        } else {
            Vec::new()
        };
        Ok(Verdict {
            status,
            used,
            seconds,
            output,
        })
    }
}

fn kill_group(pid: u32) {
    if cfg!(unix) {
        let _ = Command::new("kill")
            .args(["-KILL", "--", &format!("-{pid}")])
            .stderr(Stdio::null())
            .status();
    }
}

impl ProverAdapter for ExternalProver {
    fn name(&self) -> &str {
        &self.name
    }

    fn prove(&self, problem: &Problem<'_>, time_limit: f64) -> Verdict {
        self.run(problem, time_limit).unwrap_or_else(Verdict::error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse_file;

    fn store() -> CorpusStore {
        let text: String = (0..8).map(|i| format!("fof(f{i}, axiom, p{i}).\n")).collect();
        CorpusStore::ingest(parse_file(&text).unwrap()).unwrap()
    }

    fn ids(v: &[u32]) -> Vec<FormulaId> {
        v.iter().map(|&i| FormulaId(i)).collect()
    }

    #[test]
    fn oracle_subset_semantics() {
        let s = store();
        let oracle = SyntheticOracle::new([(FormulaId(5), ids(&[0, 1]))]);
        let offered = ids(&[0, 1, 7]);
        let v = oracle.prove(&Problem { store: &s, theorem: FormulaId(5), premises: &offered }, 1.0);
        assert_eq!(v.status, Status::Solved);
        assert_eq!(v.used, ids(&[0, 1]));
        assert_eq!(v.seconds, 0.0);
        let offered = ids(&[0, 7]);
        let v = oracle.prove(&Problem { store: &s, theorem: FormulaId(5), premises: &offered }, 1.0);
        assert_eq!(v.status, Status::Unsolved);
        let v = oracle.prove(&Problem { store: &s, theorem: FormulaId(6), premises: &offered }, 1.0);
        assert_eq!(v.status, Status::Unsolved);
    }

    #[test]
    fn oracle_prefers_smallest_proof() {
        let s = store();
        let oracle = SyntheticOracle::new([
            (FormulaId(6), ids(&[0, 1, 2])),
            (FormulaId(6), ids(&[3, 4])),
        ]);
        let offered = ids(&[0, 1, 2, 3, 4]);
        let v = oracle.prove(&Problem { store: &s, theorem: FormulaId(6), premises: &offered }, 1.0);
        assert_eq!(v.used, ids(&[3, 4]));
    }

    #[test]
    fn szs_mapping() {
        assert_eq!(parse_szs("% SZS status Theorem").0, Status::Solved);
        assert_eq!(parse_szs("% SZS status Unsatisfiable for x").0, Status::Solved);
        assert_eq!(parse_szs("% SZS status GaveUp").0, Status::Unsolved);
        assert_eq!(parse_szs("% SZS status CounterSatisfiable").0, Status::Unsolved);
        assert_eq!(parse_szs("% SZS status ResourceOut").0, Status::Timeout);
        assert_eq!(parse_szs("% SZS status Timeout").0, Status::Timeout);
        assert_eq!(parse_szs("").0, Status::Error);
        assert_eq!(parse_szs("% SZS status Inappropriate").0, Status::Error);
    }

    #[test]
    fn szs_proof_block_names() {
        let out = "% SZS status Theorem for p\n% SZS output start Proof\nfof(f1, axiom, p1, file('x', f1)).\nfof(c_0, plain, p1, inference(x, [], [fof(f3)])).\n% SZS output end Proof\n";
        let (status, names) = parse_szs(out);
        assert_eq!(status, Status::Solved);
        assert_eq!(names.unwrap(), vec!["f1", "c_0", "f3"]);
        assert_eq!(parse_szs("% SZS status Theorem").1, None);
    }

    #[test]
    fn problem_text_lists_axioms_then_conjecture() {
        let s = store();
        let premises = ids(&[1, 3]);
        let text = Problem { store: &s, theorem: FormulaId(5), premises: &premises }.to_tptp();
        assert_eq!(
            text,
            "fof(f1, axiom, p1).\nfof(f3, axiom, p3).\nfof(f5, conjecture, p5).\n"
        );
        assert_eq!(parse_file(&text).unwrap().len(), 3);
    }

    #[test]
    fn external_prover_round_trip() {
        let s = store();
        let premises = ids(&[1, 3]);
        let problem = Problem { store: &s, theorem: FormulaId(5), premises: &premises };
        let solved = ExternalProver::new("fake", "grep -q 'f3, axiom' {file} && echo '% SZS status Theorem'; echo '% SZS output start'; echo 'fof(f3, axiom, p3).'; echo '% SZS output end'");
        let v = solved.prove(&problem, 5.0);
        assert_eq!(v.status, Status::Solved, "{}", v.output);
        assert_eq!(v.used, ids(&[3]));
        let no_block = ExternalProver::new("fake", "echo 'SZS status Theorem {timelimit}'");
        let v = no_block.prove(&problem, 2.0);
        assert_eq!(v.used, premises);
        assert!(v.output.contains("Theorem 2"));
        let silent = ExternalProver::new("fake", "true");
        assert_eq!(silent.prove(&problem, 1.0).status, Status::Error);
        let mut slow = ExternalProver::new("fake", "sleep 5");
        slow.grace = Duration::from_millis(50);
        let v = slow.prove(&problem, 0.1);
        assert_eq!(v.status, Status::Timeout);
        assert!(v.seconds < 4.0);
    }
}
