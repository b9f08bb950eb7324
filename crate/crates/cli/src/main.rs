//! Command-line surface: cusp tables, Hecke eigenvalue tables, the
//! degree-one weight comparison, and the exact verification suites.
//! Exit codes: 0 success, 1 verification failure, 2 usage error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use siegel_core::cusps::{build_type_matrix, enumerate_admissible, vanishing_status};
use siegel_core::hecke::{
    eigenvalue_bad, eigenvalue_good, eigenvalue_transformed, shimura_comparison, EigenvalueTable,
    EvalMode, HalfIntegralContext,
};
use siegel_core::ring::{parse_character_spec, CycNumber, DirichletCharacter};
use siegel_core::verify::{run_suite, Suite, SuiteConfig};
use siegel_core::{cusps, Error};

const SCHEMA: u64 = 1;

#[derive(Parser)]
#[command(name = "siegel", version, about = "Exact Gauss sums, cusp tables, and Hecke eigenvalues for half-integral weight Siegel Eisenstein series at level 4N")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct LevelArgs {
    /// Full level 4N (N odd and square-free), e.g. 12 for N = 3.
    #[arg(long)]
    level: u64,
    /// Character specification "kind@m,...", kind ∈ {trivial, quadratic,
    /// gen^E:ORD}, m ∈ {4} ∪ primes(N); omitted components are trivial.
    #[arg(long, default_value = "trivial")]
    character: String,
}

impl LevelArgs {
    fn n_level(&self) -> Result<u64, Error> {
        if self.level % 4 != 0 {
            return Err(Error::Argument(format!(
                "level {} must be 4N with N odd square-free",
                self.level
            )));
        }
        let n = self.level / 4;
        siegel_core::odd_squarefree_primes(n)?;
        Ok(n)
    }

    fn character(&self) -> Result<DirichletCharacter, Error> {
        parse_character_spec(self.n_level()?, &self.character)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Table of admissible cusp types with their vanishing status.
    Cusps {
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        degree: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Hecke eigenvalue table for one operator family.
    Eigen {
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        degree: usize,
        /// Odd weight numerator k (the weight is k/2).
        #[arg(long)]
        weight_num: u64,
        #[arg(long)]
        prime: u64,
        /// Operator family: `bad` = T_j(q²) with q | N, `good` = T_j(p²)
        /// with p coprime to 2N, `prime` = the transformed T'_j(p²).
        #[arg(long)]
        op: String,
        #[arg(long)]
        j: usize,
        /// Restrict to the partition with this index (enumeration order).
        #[arg(long)]
        partition: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Degree-one comparison of eigenvalues across the two weights.
    Shimura {
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        weight_num: u64,
        #[arg(long)]
        prime: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Run a named verification suite; exit 0 iff everything passes.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    std::process::exit(code);
}

fn gauss_budget() -> u64 {
    std::env::var("SIEGEL_GAUSS_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(siegel_core::gauss::DEFAULT_GAUSS_BUDGET)
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Cusps {
            level,
            degree,
            format,
        } => cmd_cusps(&level, degree, format),
        Command::Eigen {
            level,
            degree,
            weight_num,
            prime,
            op,
            j,
            partition,
            format,
        } => cmd_eigen(&level, degree, weight_num, prime, &op, j, partition, format),
        Command::Shimura {
            level,
            weight_num,
            prime,
            format,
        } => cmd_shimura(&level, weight_num, prime, format),
        Command::Verify {
            suite,
            seed,
            trials,
            format,
        } => cmd_verify(&suite, seed, trials, format),
    }
}

fn value_fields(v: &CycNumber) -> (String, Value, String, String) {
    let exact = v.to_string();
    let json = v.to_json();
    let re = json["approx"]["re"].as_str().unwrap_or_default().to_string();
    let im = json["approx"]["im"].as_str().unwrap_or_default().to_string();
    (exact, json, re, im)
}

fn cmd_cusps(level: &LevelArgs, degree: usize, format: Format) -> Result<i32, Error> {
    let n = level.n_level()?;
    let chi = level.character()?;
    let types = enumerate_admissible(n, degree)?;
    let mut rows = Vec::new();
    for sigma in &types {
        let m = build_type_matrix(sigma);
        let status = vanishing_status(sigma, &chi)?;
        rows.push(json!({
            "partition": sigma.partition.label(),
            "d": sigma.d,
            "dprime": sigma.dprime,
            "eps": sigma.eps.to_string(),
            "matrix": m.to_json(),
            "status": status_label(&status),
        }));
    }
    let header = ["partition", "d", "dprime", "eps", "matrix", "status"];
    emit(
        format,
        json!({
            "schema": SCHEMA,
            "command": "cusps",
            "level": level.level,
            "degree": degree,
            "character": chi.to_spec_string(),
            "rows": rows,
        }),
        &header,
    );
    Ok(0)
}

fn status_label(status: &cusps::VanishingStatus) -> String {
    match status {
        cusps::VanishingStatus::ZeroPlusTypeSign => "zero (plus-type sign)".into(),
        cusps::VanishingStatus::ZeroCharacterCondition { prime } => {
            format!("zero (character condition at {prime})")
        }
        cusps::VanishingStatus::Nonvanishing => "nonvanishing".into(),
        cusps::VanishingStatus::Undetermined => "undetermined".into(),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_eigen(
    level: &LevelArgs,
    degree: usize,
    weight_num: u64,
    prime: u64,
    op: &str,
    j: usize,
    partition: Option<usize>,
    format: Format,
) -> Result<i32, Error> {
    let n = level.n_level()?;
    let chi = level.character()?;
    let ctx = HalfIntegralContext::new(degree, weight_num, n, chi.clone())?;
    if !ctx.convergent {
        eprintln!(
            "note: n = {degree} is not above (k+1)/2 = {}; values are formal identities",
            (weight_num + 1) / 2
        );
    }
    let partitions = cusps::enumerate_partitions(n, degree)?;
    let selected: Vec<_> = match partition {
        Some(idx) => {
            let p = partitions
                .get(idx)
                .ok_or_else(|| Error::Argument(format!("partition index {idx} out of range")))?;
            vec![p.clone()]
        }
        None => partitions,
    };
    let mut table = EigenvalueTable::default();
    for sigma in &selected {
        let value = match op {
            "bad" => eigenvalue_bad(&ctx, sigma, j, prime)?,
            "good" => eigenvalue_good(&ctx, sigma, j, prime)?,
            "prime" => eigenvalue_transformed(&ctx, sigma, j, prime, EvalMode::Closed)?,
            other => {
                return Err(Error::Argument(format!(
                    "unknown operator family `{other}` (expected bad|good|prime)"
                )))
            }
        };
        table.push(sigma, op, prime, j, value);
    }
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| {
            let (exact, json_v, re, im) = value_fields(&r.value);
            json!({
                "sigma": r.sigma,
                "op": r.op,
                "prime": r.prime,
                "j": r.j,
                "exact": exact,
                "value": json_v,
                "approx_re": re,
                "approx_im": im,
            })
        })
        .collect();
    let header = ["sigma", "op", "prime", "j", "exact", "approx_re", "approx_im"];
    emit(
        format,
        json!({
            "schema": SCHEMA,
            "command": "eigen",
            "level": level.level,
            "degree": degree,
            "weight_num": weight_num,
            "character": chi.to_spec_string(),
            "rows": rows,
        }),
        &header,
    );
    Ok(0)
}

fn cmd_shimura(level: &LevelArgs, weight_num: u64, prime: u64, format: Format) -> Result<i32, Error> {
    let n = level.n_level()?;
    let chi = level.character()?;
    let rows_data = shimura_comparison(n, weight_num, &chi, prime)?;
    let mut all_equal = true;
    let rows: Vec<Value> = rows_data
        .iter()
        .map(|r| {
            all_equal &= r.equal;
            json!({
                "sigma": r.sigma,
                "equal": r.equal,
                "half_integral": r.half_integral,
                "integral": r.integral,
            })
        })
        .collect();
    let header = ["sigma", "equal", "half_integral", "integral"];
    emit(
        format,
        json!({
            "schema": SCHEMA,
            "command": "shimura",
            "level": level.level,
            "weight_num": weight_num,
            "prime": prime,
            "character": chi.to_spec_string(),
            "all_equal": all_equal,
            "rows": rows,
        }),
        &header,
    );
    Ok(if all_equal { 0 } else { 1 })
}

fn cmd_verify(suite: &str, seed: u64, trials: usize, format: Format) -> Result<i32, Error> {
    let suite: Suite = suite.parse()?;
    let cfg = SuiteConfig {
        seed,
        trials,
        budget: gauss_budget(),
    };
    let report = run_suite(suite, &cfg)?;
    match format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "schema": SCHEMA, "report": report.to_json() }))
                .unwrap()
        ),
        _ => {
            for check in &report.checks {
                println!(
                    "{} {} ({} instances)",
                    if check.pass { "PASS" } else { "FAIL" },
                    check.name,
                    check.instances.len()
                );
            }
            println!("suite {}: {}", report.suite, if report.pass { "PASS" } else { "FAIL" });
        }
    }
    Ok(if report.pass { 0 } else { 1 })
}

/// Prints the payload in the chosen format; `header` selects and orders
/// the CSV/table columns from each row object.
fn emit(format: Format, payload: Value, header: &[&str]) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&payload).unwrap()),
        Format::Csv => {
            println!("{}", header.join(","));
            for row in payload["rows"].as_array().unwrap() {
                let cells: Vec<String> = header.iter().map(|h| csv_cell(&row[h])).collect();
                println!("{}", cells.join(","));
            }
        }
        Format::Table => {
            let rows = payload["rows"].as_array().unwrap();
            let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|row| {
                    header
                        .iter()
                        .enumerate()
                        .map(|(i, h)| {
                            let s = plain_cell(&row[h]);
                            widths[i] = widths[i].max(s.len());
                            s
                        })
                        .collect()
                })
                .collect();
            let line: Vec<String> = header
                .iter()
                .enumerate()
                .map(|(i, h)| format!("{h:<w$}", w = widths[i]))
                .collect();
            println!("{}", line.join("  "));
            for row in cells {
                let line: Vec<String> = row
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{c:<w$}", w = widths[i]))
                    .collect();
                println!("{}", line.join("  "));
            }
        }
    }
}

fn plain_cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    let s = plain_cell(v);
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}
