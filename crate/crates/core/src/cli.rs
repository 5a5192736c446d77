//! Command-line driver.
//!
//! Exit codes: 0 on success, 1 when no satisfying model exists, 2 on input
//! errors.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::compile::{compile, CompileOptions, WbfDag};
use crate::dot::to_dot;
use crate::generate::{random_network, GeneratorConfig};
use crate::network::{BeliefNetwork, Evidence, PartialAssignment};
use crate::oracle::{kbest_oracle, partial_roots_oracle};
use crate::search::{solve_kbest, solve_map, solve_map_polytree, HeuristicKind, SearchError, SearchMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_MODEL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Print the most probable assignment.
    Solve,
    /// Print the k most probable assignments.
    Kbest,
    /// Brute-force answer for comparison.
    Oracle,
    /// Print DAG node and edge counts.
    Compile,
    /// Print the DAG in Graphviz format.
    Dot,
    /// Write a random network.
    Gen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum HeuristicArg {
    Zero,
    MinEntry,
}

impl From<HeuristicArg> for HeuristicKind {
    fn from(h: HeuristicArg) -> Self {
        match h {
            HeuristicArg::Zero => HeuristicKind::Zero,
            HeuristicArg::MinEntry => HeuristicKind::MinEntry,
        }
    }
}

/// MAP assignments of discrete Bayesian networks by best-first search over a
/// compiled weighted boolean-function DAG.
#[derive(Clone, Debug, Parser)]
#[command(name = "wbfmap", version)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Network JSON file (not used by `gen`).
    pub network: Option<PathBuf>,
    /// Comma-separated findings, e.g. `B=t,C=f`.
    #[arg(long, default_value = "")]
    pub evidence: String,
    /// Number of assignments for `kbest` and `oracle`.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "zero")]
    pub heuristic: HeuristicArg,
    /// Keep gadget parts for probability 0 and 1 entries.
    #[arg(long)]
    pub no_prune01: bool,
    /// Zero non-prior costs: maximize the root priors only.
    #[arg(long)]
    pub zero_nonprior: bool,
    /// Resolve only the evidence and its ancestors.
    #[arg(long)]
    pub ancestral: bool,
    /// Use the memoized polytree solver for `solve`.
    #[arg(long)]
    pub polytree: bool,
    /// Print search statistics to standard error.
    #[arg(long)]
    pub stats: bool,
    /// Random seed for `gen`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 8)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub min_values: usize,
    #[arg(long, default_value_t = 3)]
    pub max_values: usize,
    #[arg(long, default_value_t = 3)]
    pub max_in_degree: usize,
    /// Fraction of one-hot CPT rows for `gen`.
    #[arg(long, default_value_t = 0.0)]
    pub deterministic: f64,
    /// Generate a polytree.
    #[arg(long)]
    pub gen_polytree: bool,
    /// Write output here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            prune01: !self.no_prune01,
            zero_nonprior: self.zero_nonprior,
        }
    }

    pub fn mode(&self) -> SearchMode {
        if self.ancestral {
            SearchMode::Ancestral
        } else {
            SearchMode::Complete
        }
    }
}

enum Failure {
    Input(String),
    NoModel,
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::NoModel => Failure::NoModel,
            other => Failure::Input(other.to_string()),
        }
    }
}

/// Shortest decimal that round-trips.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

fn write_block(out: &mut String, net: &BeliefNetwork, assignment: &PartialAssignment, cost: f64, prob: f64) {
    for (n, v) in assignment.assigned() {
        let node = net.node(n);
        out.push_str(&format!("{}={}\n", node.name, node.values[v.0]));
    }
    out.push_str(&format!("cost={}\nprob={}\n", format_number(cost), format_number(prob)));
}

fn join_blocks(blocks: Vec<String>) -> String {
    blocks.join("\n")
}

/// Runs one command, writing its output to `config.output` or `stdout` and
/// diagnostics to standard error. Returns the process exit code.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> i32 {
    match execute(config) {
        Ok(text) => {
            let written = match &config.output {
                Some(path) => fs::write(path, &text),
                None => stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_INPUT
                }
            }
        }
        Err(Failure::NoModel) => {
            eprintln!("no satisfying model");
            EXIT_NO_MODEL
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    }
}

fn load(config: &RunConfig) -> Result<(BeliefNetwork, Evidence), Failure> {
    let path = config
        .network
        .as_ref()
        .ok_or_else(|| Failure::Input("missing network file".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let net = BeliefNetwork::from_json(&text).map_err(|e| Failure::Input(e.to_string()))?;
    let ev = Evidence::parse(&config.evidence, &net).map_err(|e| Failure::Input(e.to_string()))?;
    Ok((net, ev))
}

fn compiled(config: &RunConfig, net: &BeliefNetwork, ev: &Evidence) -> Result<WbfDag, Failure> {
    compile(net, ev, config.compile_options()).map_err(|e| Failure::Input(e.to_string()))
}

fn execute(config: &RunConfig) -> Result<String, Failure> {
    match config.command {
        Command::Gen => generate(config),
        Command::Solve => {
            let (net, ev) = load(config)?;
            let dag = compiled(config, &net, &ev)?;
            let result = if config.polytree {
                solve_map_polytree(&net, &ev, &dag)?
            } else {
                let mode = config.mode();
                let h = HeuristicKind::from(config.heuristic).build(&dag, mode);
                solve_map(&dag, h.as_ref(), mode)?
            };
            if config.stats {
                eprintln!("{}", serde_json::to_string(&result.stats).expect("stats serialize"));
            }
            let mut out = String::new();
            write_block(&mut out, &net, &result.assignment, result.cost, result.probability);
            Ok(out)
        }
        Command::Kbest => {
            if config.k == 0 {
                return Err(Failure::Input("--k must be at least 1".into()));
            }
            let (net, ev) = load(config)?;
            let dag = compiled(config, &net, &ev)?;
            let mode = config.mode();
            let h = HeuristicKind::from(config.heuristic).build(&dag, mode);
            let results = solve_kbest(&dag, config.k, h.as_ref(), mode)?;
            if results.is_empty() {
                return Err(Failure::NoModel);
            }
            if config.stats {
                let last = results.last().expect("nonempty");
                eprintln!("{}", serde_json::to_string(&last.stats).expect("stats serialize"));
            }
            Ok(join_blocks(
                results
                    .iter()
                    .map(|r| {
                        let mut s = String::new();
                        write_block(&mut s, &net, &r.assignment, r.cost, r.probability);
                        s
                    })
                    .collect(),
            ))
        }
        Command::Oracle => {
            let (net, ev) = load(config)?;
            let ranked = if config.zero_nonprior {
                partial_roots_oracle(&net, &ev)
                    .map(|r| r.into_iter().collect::<Vec<_>>())
                    .map_err(|e| Failure::Input(e.to_string()))?
            } else {
                kbest_oracle(&net, &ev, config.k.max(1)).map_err(|e| Failure::Input(e.to_string()))?
            };
            if ranked.is_empty() {
                return Err(Failure::NoModel);
            }
            Ok(join_blocks(
                ranked
                    .into_iter()
                    .map(|r| {
                        let mut s = String::new();
                        let cost = -r.probability.ln();
                        write_block(&mut s, &net, &r.assignment.into(), cost, r.probability);
                        s
                    })
                    .collect(),
            ))
        }
        Command::Compile => {
            let (net, ev) = load(config)?;
            let dag = compiled(config, &net, &ev)?;
            let nodes = dag.kind_counts();
            let edges = dag.edge_counts();
            Ok(format!(
                "nodes={}\nchoice_roots={}\ncost_roots={}\nselectors={}\nimages={}\nevidence={}\n\
                 edges={}\nedges_into_selectors={}\nedges_into_images={}\nedges_into_evidence={}\n",
                nodes.total(),
                nodes.choice_roots,
                nodes.cost_roots,
                nodes.selectors,
                nodes.images,
                nodes.evidence,
                edges.total(),
                edges.selectors,
                edges.images,
                edges.evidence,
            ))
        }
        Command::Dot => {
            let (net, ev) = load(config)?;
            let dag = compiled(config, &net, &ev)?;
            Ok(to_dot(&dag, &net))
        }
    }
}

fn generate(config: &RunConfig) -> Result<String, Failure> {
    let seed = config
        .seed
        .ok_or_else(|| Failure::Input("gen requires --seed".into()))?;
    if config.nodes == 0 || config.min_values == 0 || config.min_values > config.max_values {
        return Err(Failure::Input("invalid generator bounds".into()));
    }
    if !(0.0..=1.0).contains(&config.deterministic) {
        return Err(Failure::Input("--deterministic must lie in [0, 1]".into()));
    }
    if config.gen_polytree && config.max_in_degree == 0 && config.nodes > 1 {
        return Err(Failure::Input("a connected polytree needs --max-in-degree >= 1".into()));
    }
    let gen = GeneratorConfig {
        nodes: config.nodes,
        min_values: config.min_values,
        max_values: config.max_values,
        max_in_degree: config.max_in_degree,
        deterministic_fraction: config.deterministic,
        polytree: config.gen_polytree,
    };
    let net = random_network(&gen, &mut ChaCha8Rng::seed_from_u64(seed));
    let mut text = net.to_json();
    text.push('\n');
    Ok(text)
}

/// Parses process arguments and runs.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(&config, &mut io::stdout().lock()),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests::CHAIN2;

    fn config(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("wbfmap").chain(args.iter().copied())).unwrap()
    }

    fn run_to_string(cfg: &RunConfig) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(cfg, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    fn chain2_file() -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(CHAIN2.as_bytes()).unwrap();
        f
    }

    #[test]
    fn solve_prints_block() {
        let f = chain2_file();
        let path = f.path().to_str().unwrap();
        let (code, out) = run_to_string(&config(&["solve", path, "--evidence", "B=t"]));
        assert_eq!(code, EXIT_OK);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(&lines[..2], &["A=t", "B=t"]);
        let cost: f64 = lines[2].strip_prefix("cost=").unwrap().parse().unwrap();
        let prob: f64 = lines[3].strip_prefix("prob=").unwrap().parse().unwrap();
        assert!((cost - 0.3285040669720361).abs() < 1e-12);
        assert!((prob - 0.72).abs() < 1e-12);
    }

    #[test]
    fn compile_counts() {
        let f = chain2_file();
        let path = f.path().to_str().unwrap();
        let (code, out) = run_to_string(&config(&["compile", path, "--evidence", "B=t", "--no-prune01"]));
        assert_eq!(code, EXIT_OK);
        assert!(out.starts_with("nodes=13\nchoice_roots=2\ncost_roots=4\nselectors=4\nimages=2\nevidence=1\n"));
    }

    #[test]
    fn exit_codes() {
        let f = chain2_file();
        let path = f.path().to_str().unwrap();
        assert_eq!(
            run_to_string(&config(&["solve", path, "--evidence", "B=x"])).0,
            EXIT_INPUT
        );
        assert_eq!(run_to_string(&config(&["solve", "/nonexistent.json"])).0, EXIT_INPUT);
        assert_eq!(run_to_string(&config(&["gen"])).0, EXIT_INPUT);
        assert_eq!(run_to_string(&config(&["kbest", path, "--k", "0"])).0, EXIT_INPUT);

        let mut blocked = tempfile::NamedTempFile::new().unwrap();
        blocked
            .write_all(CHAIN2.replace("[0.9,0.1],[0.5,0.5]", "[0.0,1.0],[0.0,1.0]").as_bytes())
            .unwrap();
        let bp = blocked.path().to_str().unwrap();
        assert_eq!(
            run_to_string(&config(&["solve", bp, "--evidence", "B=t"])).0,
            EXIT_NO_MODEL
        );
        assert_eq!(
            run_to_string(&config(&["oracle", bp, "--evidence", "B=t"])).0,
            EXIT_NO_MODEL
        );
    }

    #[test]
    fn solve_equals_first_kbest_block() {
        let f = chain2_file();
        let path = f.path().to_str().unwrap();
        let (_, solve) = run_to_string(&config(&["solve", path]));
        let (_, kbest) = run_to_string(&config(&["kbest", path, "--k", "1"]));
        assert_eq!(solve, kbest);
        let (_, two) = run_to_string(&config(&["kbest", path, "--k", "2", "--evidence", "B=t"]));
        let blocks: Vec<&str> = two.split("\n\n").collect();
        assert_eq!(blocks.len(), 2);
        assert!(blocks[1].starts_with("A=f\nB=t\n"));
    }

    #[test]
    fn gen_writes_valid_network() {
        let (code, out) = run_to_string(&config(&["gen", "--seed", "5", "--nodes", "6"]));
        assert_eq!(code, EXIT_OK);
        assert_eq!(BeliefNetwork::from_json(&out).unwrap().len(), 6);
    }
}
