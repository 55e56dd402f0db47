use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};

use premsel::corpus::{CorpusStore, FormulaId};
use premsel::eval::{
    evaluate_streaming, greedy_cover, percent, provable_theorems, run_pass, sample_theorems, summary,
    EvalOptions, EvalReport, ExternalProver, PassMode, Problem, ProverAdapter, RankingEngine,
    SyntheticOracle,
};
use premsel::features::{dump_line, extract_features, extract_with_locals};
use premsel::fol::{parse_file, Role};
use premsel::synth::{generate, SynthConfig};

use crate::config::{ProverKind, RunConfig};
use crate::{CorpusArgs, RunArgs};

const RESULTS_FILE: &str = "results.tsv";
const SUMMARY_FILE: &str = "summary.tsv";
const LOOP_FILE: &str = "loop.tsv";
const LOOP_DEPENDENCIES_FILE: &str = "dependencies.deps";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// The config named by `--config` (or an empty one) with flag overrides.
fn load_config(args: &CorpusArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::empty(),
    };
    if let Some(p) = &args.corpus {
        config.corpus = Some(p.clone());
    }
    if let Some(p) = &args.dependencies {
        config.dependencies = Some(p.clone());
    }
    Ok(config)
}

fn apply_run_args(config: &mut RunConfig, run: &RunArgs) {
    if let Some(o) = &run.output {
        config.output = o.clone();
    }
    if let Some(t) = run.threads {
        config.threads = t;
    }
    if let Some(t) = run.time_limit {
        config.time_limit = t;
    }
}

fn load_store(config: &RunConfig) -> Result<CorpusStore> {
    let path = config.corpus_path()?;
    let formulas = parse_file(&read(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
    let mut store = CorpusStore::ingest(formulas).with_context(|| format!("invalid corpus {}", path.display()))?;
    if let Some(deps) = &config.dependencies {
        store
            .load_dependencies(&read(deps)?)
            .with_context(|| format!("invalid dependencies {}", deps.display()))?;
    }
    Ok(store)
}

fn build_prover(config: &RunConfig, store: &CorpusStore) -> Result<Box<dyn ProverAdapter>> {
    let p = &config.prover;
    Ok(match p.kind {
        ProverKind::Synthetic => {
            let path = p
                .truth
                .as_deref()
                .context("the synthetic prover needs `truth` (a dependency file) in [prover]")?;
            // Stored training proofs are real proofs, so the oracle knows them too.
            let mut truth = store.clone();
            truth
                .load_dependencies(&read(path)?)
                .with_context(|| format!("invalid truth dependencies {}", path.display()))?;
            Box::new(SyntheticOracle::from_store(&truth))
        }
        ProverKind::External => {
            let command = p.command.as_deref().context("an external prover needs `command` in [prover]")?;
            let name = p.name.clone().unwrap_or_else(|| "external".to_string());
            Box::new(ExternalProver::new(name, command))
        }
    })
}

/// The requested method names, or every defined one.
fn method_names(methods: &premsel::eval::MethodSet, requested: &[String]) -> Result<Vec<String>> {
    if requested.is_empty() {
        ensure!(!methods.is_empty(), "the config defines no methods");
        return Ok(methods.names().map(str::to_string).collect());
    }
    for m in requested {
        methods.get(m)?;
    }
    Ok(requested.to_vec())
}

fn resolve_formula(store: &CorpusStore, key: &str) -> Result<FormulaId> {
    if let Some(id) = store.id_of(key) {
        return Ok(id);
    }
    match key.parse::<u32>() {
        Ok(n) if n as usize <= store.len() => Ok(FormulaId(n)),
        Ok(n) => bail!("position {n} is beyond the corpus end ({})", store.len()),
        Err(_) => bail!("no formula named `{key}`"),
    }
}

pub fn ingest(args: &CorpusArgs, dump: Option<&Path>) -> Result<()> {
    let config = load_config(args)?;
    let store = load_store(&config)?;
    let provable = provable_theorems(&store).len();
    println!("formulas\t{}", store.len());
    println!("provable\t{provable}");
    println!("features\t{}", store.interner().len());
    println!("proved\t{}", store.proved_count());
    println!("dependencies\t{}", store.dependency_count());
    if let Some(path) = dump {
        let mut text = String::new();
        for id in store.ids() {
            text.push_str(&dump_line(store.name(id), store.bag(id), store.interner()));
            text.push('\n');
        }
        write(path, &text)?;
    }
    Ok(())
}

pub fn advise(args: &CorpusArgs, conjecture: &Path, cutoff: Option<&str>, method: &str, locals: &[String]) -> Result<()> {
    let config = load_config(args)?;
    let methods = config.method_set()?;
    let spec = methods.get(method)?;
    let formulas = parse_file(&read(conjecture)?).with_context(|| format!("cannot parse {}", conjecture.display()))?;
    let conj = match formulas.as_slice() {
        [only] => only,
        many => match many.iter().find(|f| f.role == Role::Conjecture) {
            Some(c) => c,
            None => bail!("{} holds {} formulas and no conjecture", conjecture.display(), many.len()),
        },
    };
    let store = load_store(&config)?;
    let cutoff = match cutoff {
        Some(key) => resolve_formula(&store, key)?,
        None => store.end(),
    };
    let named = if locals.is_empty() {
        extract_features(&conj.body, true)
    } else {
        let locals: BTreeSet<String> = locals.iter().cloned().collect();
        extract_with_locals(&conj.body, &locals, true)?
    };
    let query = store.interner().query_bag(&named, true);
    let engine = RankingEngine::new(&store, &methods);
    let ranking = engine.rank(method, &query, cutoff)?;
    let mut out = io::stdout().lock();
    for (i, (p, score)) in ranking.iter().take(spec.slice).enumerate() {
        writeln!(out, "{}\t{}\t{score}", i + 1, store.name(p))?;
    }
    Ok(())
}

/// Drops a trailing line cut short by an interrupted run.
fn completed_results(path: &Path) -> Result<EvalReport> {
    if !path.exists() {
        return Ok(EvalReport::default());
    }
    let mut text = read(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        text.truncate(text.rfind('\n').map_or(0, |i| i + 1));
        write(path, &text)?;
    }
    EvalReport::parse(&text).with_context(|| format!("invalid results file {}", path.display()))
}

fn summary_table(report: &EvalReport) -> String {
    let mut out = String::from("method\tattempted\tsolved\tpercent\tsotac\n");
    for row in summary(report) {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{:.2}\t{:.4}",
            row.method, row.attempted, row.solved, row.percent, row.sotac
        );
    }
    out
}

pub fn eval(args: &CorpusArgs, run: &RunArgs, stride: Option<usize>) -> Result<()> {
    let mut config = load_config(args)?;
    apply_run_args(&mut config, run);
    if let Some(s) = stride {
        config.stride = s;
    }
    config.validate()?;
    let methods = config.method_set()?;
    let names = method_names(&methods, &run.methods)?;
    let store = load_store(&config)?;
    let prover = build_prover(&config, &store)?;
    fs::create_dir_all(&config.output)
        .with_context(|| format!("cannot create {}", config.output.display()))?;
    let results = config.output.join(RESULTS_FILE);
    let done: HashSet<(String, String)> = completed_results(&results)?
        .rows
        .into_iter()
        .map(|r| (r.theorem, r.method))
        .collect();
    let pairs: Vec<(FormulaId, String)> = sample_theorems(&store, config.stride)
        .into_iter()
        .flat_map(|t| names.iter().map(move |m| (t, m.clone())))
        .filter(|(t, m)| !done.contains(&(store.name(*t).to_string(), m.clone())))
        .collect();
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&results)
        .with_context(|| format!("cannot open {}", results.display()))?;
    let engine = RankingEngine::new(&store, &methods);
    let options = EvalOptions {
        time_limit: config.time_limit,
        threads: config.threads,
    };
    let mut io_error = None;
    let outcome = evaluate_streaming(&engine, &pairs, prover.as_ref(), &options, None, &mut |a| {
        if io_error.is_none() {
            let line = a.to_row(&store).to_line();
            if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                io_error = Some(e);
            }
        }
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e).with_context(|| format!("cannot append to {}", results.display()));
    }
    outcome?;
    drop(file);
    let report = completed_results(&results)?;
    let table = summary_table(&report);
    write(&config.output.join(SUMMARY_FILE), &table)?;
    print!("{table}");
    Ok(())
}

/// Per-theorem premise sets from a `theorem:premise ...` file.
fn load_references(store: &CorpusStore, path: &Path) -> Result<HashMap<FormulaId, BTreeSet<FormulaId>>> {
    let mut refs: HashMap<FormulaId, BTreeSet<FormulaId>> = HashMap::new();
    for (i, line) in read(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let (theorem, premises) = line
            .split_once(':')
            .with_context(|| format!("{}:{}: expected `theorem:premise ...`", path.display(), i + 1))?;
        let lookup = |name: &str| {
            store
                .id_of(name)
                .with_context(|| format!("{}:{}: unknown formula `{name}`", path.display(), i + 1))
        };
        let entry = refs.entry(lookup(theorem.trim())?).or_default();
        for p in premises.split_whitespace() {
            entry.insert(lookup(p)?);
        }
    }
    Ok(refs)
}

pub fn run_loop(args: &CorpusArgs, run: &RunArgs, passes: Option<usize>) -> Result<()> {
    let mut config = load_config(args)?;
    apply_run_args(&mut config, run);
    if let Some(p) = passes {
        config.passes = p;
    }
    config.validate()?;
    let methods = config.method_set()?;
    let names = method_names(&methods, &run.methods)?;
    let mut store = load_store(&config)?;
    let prover = build_prover(&config, &store)?;
    let first_mode = match &config.references {
        Some(path) => PassMode::Limited {
            references: load_references(&store, path)?,
        },
        None => PassMode::Unlimited,
    };
    fs::create_dir_all(&config.output)
        .with_context(|| format!("cannot create {}", config.output.display()))?;
    let options = EvalOptions {
        time_limit: config.time_limit,
        threads: config.threads,
    };
    let provable = provable_theorems(&store);
    let solved = provable.iter().filter(|&&t| !store.proofs(t).is_empty()).count();
    let mut table = String::from("pass\tsolved\tpercent\tdependencies\n");
    let row = |table: &mut String, pass: usize, solved: usize, deps: usize| {
        let line = format!("{pass}\t{solved}\t{:.2}\t{deps}\n", percent(solved, provable.len()));
        print!("{line}");
        table.push_str(&line);
    };
    println!("pass\tsolved\tpercent\tdependencies");
    row(&mut table, 0, solved, store.dependency_count());
    for pass in 1..=config.passes {
        let mode = if pass == 1 { first_mode.clone() } else { PassMode::Unlimited };
        let (s, attempts) = run_pass(&mut store, &methods, &names, prover.as_ref(), &options, &mode, pass)?;
        row(&mut table, pass, s.total_solved, s.dependencies);
        let report = EvalReport::new(attempts.iter().map(|a| a.to_row(&store)).collect());
        write(&config.output.join(format!("pass-{pass}.tsv")), &report.to_text())?;
        write(&config.output.join(LOOP_FILE), &table)?;
        write(&config.output.join(LOOP_DEPENDENCIES_FILE), &store.write_dependencies())?;
    }
    write(&config.output.join(LOOP_FILE), &table)?;
    Ok(())
}

pub fn cover(results: &Path, output: Option<&Path>) -> Result<()> {
    let report = EvalReport::parse(&read(results)?)
        .with_context(|| format!("invalid results file {}", results.display()))?;
    let mut text = String::from("step\tmethod\tadded\tcumulative\tpercent\n");
    for (i, step) in greedy_cover(&report).iter().enumerate() {
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{:.2}",
            i + 1,
            step.method,
            step.added,
            step.cumulative,
            step.percent
        );
    }
    if let Some(path) = output {
        write(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn export(args: &CorpusArgs, theorem: &str, method: &str, output: Option<&Path>) -> Result<()> {
    let config = load_config(args)?;
    let methods = config.method_set()?;
    methods.get(method)?;
    let store = load_store(&config)?;
    let id = store.id_of(theorem).with_context(|| format!("no formula named `{theorem}`"))?;
    let engine = RankingEngine::new(&store, &methods);
    let body = &store.formula(id).body;
    let slice = engine.select(method, &engine.theorem_query(id), id, Some(body), None)?;
    let premises: Vec<FormulaId> = store
        .background_closure(&slice.into_iter().collect(), id, Some(body))
        .into_iter()
        .collect();
    let text = Problem {
        store: &store,
        theorem: id,
        premises: &premises,
    }
    .to_tptp();
    match output {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn gen_synthetic(dir: &Path, formulas: usize, mean_proof: f64, symbols: Option<usize>, seed: u64) -> Result<()> {
    ensure!(formulas > 0, "--formulas must be positive");
    ensure!(mean_proof >= 2.0 && mean_proof.is_finite(), "--mean-proof must be at least 2");
    let mut synth = SynthConfig::new(formulas);
    synth.mean_proof = mean_proof;
    synth.seed = seed;
    if let Some(s) = symbols {
        ensure!(s > 0, "--symbols must be positive");
        synth.symbols = s;
    }
    let corpus = generate(&synth);
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write(&dir.join("corpus.p"), &corpus.to_tptp())?;
    write(&dir.join("truth.deps"), &corpus.dependency_text(&corpus.truth))?;
    write(&dir.join("training.deps"), &corpus.dependency_text(&corpus.training))?;
    let config = format!(
        "corpus = \"corpus.p\"\n\
         dependencies = \"training.deps\"\n\
         output = \"out\"\n\
         slice_sizes = [32, 64, 128]\n\
         seed = {seed}\n\
         \n\
         [prover]\n\
         kind = \"synthetic\"\n\
         truth = \"truth.deps\"\n\
         \n\
         [methods.knn]\n\
         learner = \"knn\"\n\
         \n\
         [methods.nb]\n\
         learner = \"nb\"\n\
         \n\
         [methods.knn_nb]\n\
         learner = \"combine\"\n\
         members = [\"knn\", \"nb\"]\n\
         scheme = \"geometric\"\n"
    );
    write(&dir.join("premsel.toml"), &config)?;
    println!(
        "{} formulas, {} ground-truth proofs, {} training proofs written to {}",
        corpus.formulas.len(),
        corpus.truth.len(),
        corpus.training.len(),
        dir.display()
    );
    Ok(())
}

