//! Command-line front end.
//!
//! Subcommands: `classify` (one parameter cell to a row directory), `rank`
//! and `verify` (inspect a generator file), `tables` (reproduce the result
//! tables and compare against the embedded reference), `gammal1` (semilinear
//! one-dimensional groups), and `row30` (the dimension-ten construction).
//!
//! Exit codes: 0 success; 1 invalid parameters or unreadable input; 2 work
//! budget exceeded; 3 verify-expectation mismatch; 4 table mismatch.

use crate::classify::{
    build_gammal1, classify_row, construct_row30, detect_special_structure, read_matgroup,
    reference_row, run_tables, write_matgroup, Budgets, GroupRecord, RowRecord, RowStatus,
    TableOutcome,
};
use crate::engine::MatGroup;
use crate::extras::Kind;
use crate::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

/// Exit codes.
const EXIT_OK: i32 = 0;
const EXIT_INVALID: i32 = 1;
const EXIT_BUDGET: i32 = 2;
const EXIT_EXPECTATION: i32 = 3;
const EXIT_TABLE_MISMATCH: i32 = 4;

#[derive(Parser)]
#[command(
    name = "solvrank",
    about = "Classify solvable matrix groups of small permutation rank",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Plus,
    Minus,
    Odd,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Plus => Kind::Plus,
            KindArg::Minus => Kind::Minus,
            KindArg::Odd => Kind::Odd,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BudgetArg {
    Quick,
    Full,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Prime q of the special subgroup (2 or 3).
    #[arg(long)]
    q: u64,
    /// Width exponent m (the special subgroup has order q^(2m+1)).
    #[arg(long)]
    m: usize,
    /// Characteristic p of the ground field.
    #[arg(long)]
    p: u64,
    /// Field degree k (the written field is GF(p^k)).
    #[arg(long)]
    k: usize,
    /// Central-product type of the special subgroup.
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Tensor multiplicity r (> 1 selects the reducible search).
    #[arg(long = "reducible-r", default_value_t = 1)]
    reducible_r: usize,
    /// Override for the brute-force ambient-scan budget.
    #[arg(long = "brute-threshold")]
    brute_threshold: Option<u128>,
    /// Worker count (accepted for interface stability; runs are
    /// deterministic regardless).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory (default: row_q<q>m<m>p<p>k<k>_<kind>).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    /// Generator file in the matgroup v1 format.
    file: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Generator file in the matgroup v1 format.
    file: PathBuf,
    /// Expected permutation rank.
    #[arg(long = "expect-rank")]
    expect_rank: Option<u64>,
    /// Expected group order.
    #[arg(long = "expect-order")]
    expect_order: Option<u128>,
}

#[derive(Args)]
struct TablesArgs {
    /// Which rows to attempt.
    #[arg(long, value_enum, default_value_t = BudgetArg::Quick)]
    budget: BudgetArg,
    /// Worker count (accepted for interface stability).
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory for tables.csv (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Gammal1Args {
    /// Characteristic p.
    #[arg(long)]
    p: u64,
    /// Field degree d; the group acts on GF(p)^d.
    #[arg(long)]
    d: usize,
    /// Optional matgroup v1 output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Row30Args {
    /// Output directory for the generator fixture (default: current
    /// directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one parameter cell and write its row directory.
    Classify(ClassifyArgs),
    /// Print the permutation rank of the group in a generator file.
    Rank(RankArgs),
    /// Print group properties, optionally checking expectations.
    Verify(VerifyArgs),
    /// Reproduce the result tables and compare with the reference values.
    Tables(TablesArgs),
    /// Build a one-dimensional semilinear group over GF(p^d).
    Gammal1(Gammal1Args),
    /// Build the dimension-ten tensor construction and write its fixture.
    Row30(Row30Args),
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Rank(a) => cmd_rank(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Tables(a) => cmd_tables(a),
        Command::Gammal1(a) => cmd_gammal1(a),
        Command::Row30(a) => cmd_row30(a),
    }
}

/// Default budgets with the environment override applied: SOLVRANK_BUDGET
/// (an integer) replaces the brute-force ambient-scan budget.
fn effective_budgets() -> Result<Budgets, String> {
    let mut b = Budgets::default();
    if let Ok(val) = std::env::var("SOLVRANK_BUDGET") {
        let parsed: u128 = val
            .trim()
            .parse()
            .map_err(|_| format!("SOLVRANK_BUDGET is not an integer: {val:?}"))?;
        b.brute = parsed;
    }
    Ok(b)
}

fn exit_code_of(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded(_) => EXIT_BUDGET,
        _ => EXIT_INVALID,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code_of(e)
}

fn invalid(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_INVALID
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

fn cmd_classify(a: ClassifyArgs) -> i32 {
    if a.jobs == 0 {
        return invalid("--jobs must be at least 1");
    }
    match (a.q, a.m) {
        (2, 1) | (2, 2) | (3, 1) => {}
        (2, _) | (3, _) => return invalid("m must be 1 (or 2 when q is 2)"),
        _ => return invalid("q must be 2 or 3"),
    }
    let kind: Kind = a.kind.into();
    if (a.q == 2) != (kind != Kind::Odd) {
        return invalid("kind odd goes with q 3; plus/minus go with q 2");
    }
    if !crate::gfarith::is_prime(a.p) || a.p == a.q {
        return invalid("p must be a prime different from q");
    }
    if a.k == 0 || a.k > 5 {
        return invalid("k must be between 1 and 5");
    }
    if a.reducible_r == 0 {
        return invalid("--reducible-r must be at least 1");
    }
    let mut budgets = match effective_budgets() {
        Ok(b) => b,
        Err(msg) => return invalid(&msg),
    };
    if let Some(t) = a.brute_threshold {
        budgets.brute = t;
    }

    // Plus-type plain runs first classify the matching minus-type cell so
    // groups already listed there are not repeated.
    let context: Option<Vec<GroupRecord>> = if kind == Kind::Plus && a.reducible_r == 1 {
        match classify_row(a.q, a.m, a.p, a.k, Kind::Minus, 1, None, &budgets) {
            Ok(rr) => Some(rr.groups),
            Err(e) => return fail(&e),
        }
    } else {
        None
    };
    let result = classify_row(
        a.q,
        a.m,
        a.p,
        a.k,
        kind,
        a.reducible_r,
        context.as_deref(),
        &budgets,
    );
    let rr = match result {
        Ok(rr) => rr,
        Err(e) => return fail(&e),
    };
    let dir = a.out.unwrap_or_else(|| {
        PathBuf::from(format!(
            "row_q{}m{}p{}k{}_{}",
            a.q,
            a.m,
            a.p,
            a.k,
            kind.label()
        ))
    });
    if let Err(e) = write_row_dir(&dir, &rr) {
        return fail(&e);
    }
    for note in &rr.notes {
        eprintln!("note: {note}");
    }
    println!(
        "rank {} max_order {} num_groups {} -> {}",
        rr.rank,
        rr.max_order,
        rr.num_groups,
        dir.display()
    );
    EXIT_OK
}

/// Writes row.json plus one generator file per group into `dir`.
fn write_row_dir(dir: &Path, rr: &RowRecord) -> crate::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut group_values = Vec::with_capacity(rr.groups.len());
    for (i, g) in rr.groups.iter().enumerate() {
        let fname = format!("g{i:02}.matgroup");
        let mg = MatGroup::new(g.gens[0].field.clone(), rr.dim, g.gens.clone());
        std::fs::write(dir.join(&fname), write_matgroup(&mg))?;
        group_values.push(serde_json::json!({
            "order": order_as_u64(g.order),
            "rank": g.rank,
            "gens": fname,
            "structure": &g.structure,
        }));
    }
    let doc = serde_json::json!({
        "q": rr.q,
        "m": rr.m,
        "p": rr.p,
        "k": rr.k,
        "d": rr.dim,
        "kind": rr.kind.label(),
        "rank": rr.rank,
        "max_order": order_as_u64(rr.max_order),
        "num_groups": rr.num_groups,
        "groups": group_values,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable document");
    text.push('\n');
    std::fs::write(dir.join("row.json"), text)?;
    Ok(())
}

fn order_as_u64(o: u128) -> u64 {
    u64::try_from(o).expect("group order fits the document integer range")
}

// ---------------------------------------------------------------------------
// rank / verify
// ---------------------------------------------------------------------------

fn read_group_file(path: &Path) -> crate::Result<MatGroup> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    read_matgroup(&text)
}

/// Guards the orbit walk: the permutation domain must be enumerable.
fn checked_rank(g: &MatGroup) -> crate::Result<u64> {
    let bits = (g.dim * g.field.k) as f64 * (g.field.p as f64).log2();
    if bits > 24.0 {
        return Err(Error::BudgetExceeded(format!(
            "permutation domain of about 2^{bits:.0} points is too large to walk"
        )));
    }
    Ok(g.permutation_rank())
}

fn cmd_rank(a: RankArgs) -> i32 {
    let g = match read_group_file(&a.file) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    match checked_rank(&g) {
        Ok(r) => {
            println!("{r}");
            EXIT_OK
        }
        Err(e) => fail(&e),
    }
}

fn cmd_verify(a: VerifyArgs) -> i32 {
    let budgets = match effective_budgets() {
        Ok(b) => b,
        Err(msg) => return invalid(&msg),
    };
    let g = match read_group_file(&a.file) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let order = g.order();
    let solvable = g.is_solvable();
    let irreducible = crate::modana::is_irreducible(&g.field, g.dim, &g.gens);
    let quasi = match crate::modana::is_quasiprimitive(&g, budgets.enumeration) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let rank = match checked_rank(&g) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("order {order}");
    println!("solvable {solvable}");
    println!("irreducible {irreducible}");
    println!("quasiprimitive {quasi}");
    println!("rank {rank}");
    match detect_special_structure(&g, &budgets) {
        Ok(Some((q, m, report))) => {
            println!("special-subgroup q {q} m {m}");
            println!(
                "layers |U| {} |F| {} |A| {} |G| {}",
                report.u_order, report.f_order, report.a_order, report.g_order
            );
            println!("module dim_w {} b {}", report.dim_w, report.b);
            for (name, ok) in &report.checks {
                println!("check {name} {ok}");
            }
            println!("structure-pass {}", report.all_pass);
        }
        Ok(None) => {}
        Err(e) => return fail(&e),
    }
    let mut ok = true;
    if let Some(er) = a.expect_rank {
        if er != rank {
            eprintln!("expectation failed: rank is {rank}, expected {er}");
            ok = false;
        }
    }
    if let Some(eo) = a.expect_order {
        if eo != order {
            eprintln!("expectation failed: order is {order}, expected {eo}");
            ok = false;
        }
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_EXPECTATION
    }
}

// ---------------------------------------------------------------------------
// tables
// ---------------------------------------------------------------------------

fn cmd_tables(a: TablesArgs) -> i32 {
    if a.jobs == 0 {
        return invalid("--jobs must be at least 1");
    }
    let budgets = match effective_budgets() {
        Ok(b) => b,
        Err(msg) => return invalid(&msg),
    };
    let out_dir = a.out.unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        return fail(&Error::Io(e));
    }
    let quick = a.budget == BudgetArg::Quick;
    let outcome = run_tables(quick, &budgets);
    let csv = tables_csv(&outcome);
    if let Err(e) = std::fs::write(out_dir.join("tables.csv"), csv) {
        return fail(&Error::Io(e));
    }
    for row in &outcome.rows {
        let label = match &row.status {
            RowStatus::Match => "MATCH".to_string(),
            RowStatus::Mismatch(m) => format!("MISMATCH ({m})"),
            RowStatus::Skipped(m) => format!("SKIPPED ({m})"),
        };
        println!("row {:2}: {label}", row.golden.no);
    }
    for scan in &outcome.scans {
        let label = match &scan.status {
            RowStatus::Match => "MATCH".to_string(),
            RowStatus::Mismatch(m) => format!("MISMATCH ({m})"),
            RowStatus::Skipped(m) => format!("SKIPPED ({m})"),
        };
        println!("scan {}: {label}", scan.label);
    }
    let attempted = outcome
        .rows
        .iter()
        .filter(|r| !matches!(r.status, RowStatus::Skipped(_)))
        .count();
    println!(
        "rows attempted {attempted}, scans {}, overall {}",
        outcome.scans.len(),
        if outcome.all_match { "MATCH" } else { "MISMATCH" }
    );
    if outcome.all_match {
        EXIT_OK
    } else {
        EXIT_TABLE_MISMATCH
    }
}

/// Renders the comparison table: the reference columns plus the comparison
/// verdict per attempted row.
fn tables_csv(outcome: &TableOutcome) -> String {
    let mut out = String::from("No.,q,m,p,k,d,Rank(G),Max|G0|,Num Gps,Note,Match\n");
    for row in &outcome.rows {
        let g = &row.golden;
        let verdict = match &row.status {
            RowStatus::Match => "MATCH",
            RowStatus::Mismatch(_) => "MISMATCH",
            RowStatus::Skipped(_) => "SKIPPED",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            g.no, g.q, g.m, g.p, g.k, g.d, g.rank, g.max_order, g.num_groups, g.note(), verdict
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// gammal1 / row30
// ---------------------------------------------------------------------------

fn cmd_gammal1(a: Gammal1Args) -> i32 {
    let g = match build_gammal1(a.p, a.d) {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let rank = match checked_rank(&g) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    println!("order {}", g.order());
    println!("rank {rank}");
    if let Some(path) = a.out {
        if let Err(e) = std::fs::write(&path, write_matgroup(&g)) {
            return fail(&Error::Io(e));
        }
        println!("wrote {}", path.display());
    }
    EXIT_OK
}

fn cmd_row30(a: Row30Args) -> i32 {
    let budgets = match effective_budgets() {
        Ok(b) => b,
        Err(msg) => return invalid(&msg),
    };
    let rr = match construct_row30(&budgets) {
        Ok(rr) => rr,
        Err(e) => return fail(&e),
    };
    let reference = reference_row(30).expect("row 30 is present in the reference table");
    let dir = a.out.unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return fail(&Error::Io(e));
    }
    let g = &rr.groups[0];
    let mg = MatGroup::new(g.gens[0].field.clone(), rr.dim, g.gens.clone());
    let path = dir.join("row30.matgroup");
    if let Err(e) = std::fs::write(&path, write_matgroup(&mg)) {
        return fail(&Error::Io(e));
    }
    println!("order {}", rr.max_order);
    println!("rank {}", rr.rank);
    println!(
        "reference-match {}",
        rr.max_order == reference.max_order && rr.rank == reference.rank
    );
    println!("wrote {}", path.display());
    EXIT_OK
}
