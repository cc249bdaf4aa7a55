//! Shared by the golden and acceptance targets: the CLI case table, the
//! golden-file layout and a payoff-expression generator.
//!
//! Each case runs from `tests/fixtures`. A golden file holds stdout followed,
//! when non-empty, by a `# stderr` section.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

use obtuse_cli::payoff::{BinOp, Expr, Func};
use rand::Rng;

pub struct Case {
    pub name: &'static str,
    pub args: &'static [&'static str],
    pub env: &'static [(&'static str, &'static str)],
    pub code: i32,
}

const fn case(name: &'static str, args: &'static [&'static str], code: i32) -> Case {
    Case {
        name,
        args,
        env: &[],
        code,
    }
}

const CALL: &str = "max(S(1) - 100, 0)";

pub const CASES: &[Case] = &[
    case(
        "walk_validate_bernoulli",
        &["walk", "validate", "bernoulli_n0.json"],
        0,
    ),
    case(
        "walk_validate_bad",
        &["walk", "validate", "bad_walk.json", "--format", "csv"],
        1,
    ),
    case(
        "walk_construct_d2",
        &["walk", "construct", "d2_probs.json"],
        0,
    ),
    case(
        "walk_construct_flags",
        &[
            "walk",
            "construct",
            "--p",
            "0.25,0.25,0.5",
            "--horizon",
            "0",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "chaos_decompose_d2",
        &[
            "chaos",
            "decompose",
            "d2_probs.json",
            "--payoff-table",
            "f_d2.json",
        ],
        0,
    ),
    case(
        "chaos_decompose_csv",
        &[
            "chaos",
            "decompose",
            "bernoulli_n1.json",
            "--payoff-table",
            "f_n1.json",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "chaos_reconstruct_d2",
        &[
            "chaos",
            "reconstruct",
            "d2_probs.json",
            "--coeffs",
            "chaos_d2.json",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "gradient_n1",
        &[
            "gradient",
            "bernoulli_n1.json",
            "--payoff-table",
            "f_n1.json",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "gradient_chaos_d2",
        &[
            "gradient",
            "d2_probs.json",
            "--payoff-table",
            "f_d2.json",
            "--chaos",
        ],
        0,
    ),
    case(
        "clark_ocone_n1",
        &[
            "clark-ocone",
            "bernoulli_n1.json",
            "--payoff-table",
            "f_n1.json",
        ],
        0,
    ),
    case(
        "clark_ocone_from_0",
        &[
            "clark-ocone",
            "d2_probs.json",
            "--payoff-table",
            "f_d2.json",
            "--from",
            "0",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "divergence_n1",
        &[
            "divergence",
            "bernoulli_n1.json",
            "--process",
            "process_n1.json",
        ],
        0,
    ),
    case(
        "ou_chaos",
        &[
            "ou",
            "d2_probs.json",
            "--payoff-table",
            "f_d2.json",
            "--t",
            "0.3",
        ],
        0,
    ),
    case(
        "ou_kernel",
        &[
            "ou",
            "d2_probs.json",
            "--payoff-table",
            "f_d2.json",
            "--t",
            "0.3",
            "--form",
            "kernel",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "ou_matrix",
        &[
            "ou",
            "bernoulli_n0.json",
            "--payoff-table",
            "y0.json",
            "--t",
            "1",
            "--matrix",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "ou_negative_time",
        &[
            "ou",
            "bernoulli_n0.json",
            "--payoff-table",
            "y0.json",
            "--t",
            "-1",
        ],
        1,
    ),
    case(
        "deviation_y0",
        &[
            "deviation",
            "bernoulli_n0.json",
            "--payoff-table",
            "y0.json",
            "--x",
            "1",
        ],
        0,
    ),
    case(
        "deviation_csv",
        &[
            "deviation",
            "d2_probs.json",
            "--payoff-table",
            "f_d2.json",
            "--x",
            "0.5",
            "--format",
            "csv",
        ],
        0,
    ),
    case("market_emm_crr", &["market", "emm", "crr1.json"], 0),
    case(
        "market_emm_basket",
        &["market", "emm", "basket.json", "--format", "csv"],
        0,
    ),
    case(
        "market_emm_arbitrage",
        &["market", "emm", "arbitrage.json"],
        1,
    ),
    case(
        "market_price_crr1",
        &["market", "price", "crr1.json", "--payoff", CALL],
        0,
    ),
    case(
        "market_price_crr2",
        &[
            "market",
            "price",
            "crr2.json",
            "--payoff",
            CALL,
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "market_price_table",
        &[
            "market",
            "price",
            "crr2.json",
            "--payoff-table",
            "f_n1.json",
        ],
        0,
    ),
    case(
        "market_hedge_crr1",
        &[
            "market",
            "hedge",
            "crr1.json",
            "--payoff",
            CALL,
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "market_hedge_crr2_co",
        &[
            "market",
            "hedge",
            "crr2.json",
            "--payoff",
            CALL,
            "--method",
            "clark-ocone",
        ],
        0,
    ),
    case(
        "market_hedge_basket",
        &[
            "market",
            "hedge",
            "basket.json",
            "--payoff",
            "max(0.5*(S(1)+S(2)) - 75, 0)",
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "market_verify_crr2",
        &[
            "market",
            "verify",
            "crr2.json",
            "--payoff",
            CALL,
            "--format",
            "csv",
        ],
        0,
    ),
    case(
        "market_verify_file",
        &[
            "market",
            "verify",
            "crr2.json",
            "--payoff",
            CALL,
            "--strategy",
            "strategy_crr2.csv",
        ],
        0,
    ),
    case(
        "market_verify_broken",
        &[
            "market",
            "verify",
            "crr2.json",
            "--payoff",
            CALL,
            "--strategy",
            "strategy_broken.csv",
        ],
        1,
    ),
    case(
        "payoff_index_error",
        &["market", "price", "crr1.json", "--payoff", "S(3)"],
        2,
    ),
    case(
        "payoff_syntax_error",
        &[
            "market",
            "price",
            "crr1.json",
            "--payoff",
            "max(S(1),\n 2 +)",
        ],
        2,
    ),
    case(
        "payoff_division",
        &["market", "price", "crr1.json", "--payoff", "1/(S(1)-110)"],
        1,
    ),
    case("missing_file", &["walk", "validate", "no_such.json"], 2),
    Case {
        name: "cap_from_env",
        args: &["market", "price", "crr2.json", "--payoff", CALL],
        env: &[("OBTUSE_CAP", "2")],
        code: 1,
    },
    Case {
        name: "cap_flag_beats_env",
        args: &[
            "market",
            "price",
            "crr2.json",
            "--payoff",
            CALL,
            "--cap",
            "4",
        ],
        env: &[("OBTUSE_CAP", "2")],
        code: 0,
    },
];

pub fn dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join(sub)
}

pub fn run(case: &Case) -> (i32, Vec<u8>, Vec<u8>) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_obtuse"));
    cmd.args(case.args)
        .current_dir(dir("fixtures"))
        .env_remove("OBTUSE_CAP");
    for (k, v) in case.env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        out.stdout,
        out.stderr,
    )
}

pub fn golden_path(case: &Case) -> PathBuf {
    let csv = case.args.windows(2).any(|w| w == ["--format", "csv"]);
    let ext = if case.code == 2 {
        "stderr"
    } else if csv {
        "csv"
    } else {
        "json"
    };
    dir("golden").join(format!("{}.{ext}", case.name))
}

pub fn golden_bytes(stdout: &[u8], stderr: &[u8]) -> Vec<u8> {
    let mut got = stdout.to_vec();
    if !stderr.is_empty() {
        got.extend_from_slice(b"# stderr\n");
        got.extend_from_slice(stderr);
    }
    got
}

/// Case whose golden file matches a fresh run, with the expected exit code.
pub fn matches_golden(case: &Case) -> bool {
    let (code, stdout, stderr) = run(case);
    code == case.code
        && std::fs::read(golden_path(case)).ok() == Some(golden_bytes(&stdout, &stderr))
}

/// Random tree in the parser's canonical form: non-negative literals, indices
/// within `d` and `horizon`.
pub fn random_expr(rng: &mut impl Rng, d: usize, horizon: usize, depth: usize) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        return match rng.gen_range(0..4) {
            0 => Expr::Num(rng.gen_range(0..300) as f64),
            1 => Expr::Num(
                rng.gen_range(0..10_000) as f64 / 64.0 + rng.gen_range(0..3) as f64 * 1e-9,
            ),
            2 => Expr::Price(rng.gen_range(1..=d), rng.gen_range(0..=horizon)),
            _ => Expr::Bond(rng.gen_range(0..=horizon)),
        };
    }
    let op = rng.gen_range(0..8);
    let mut sub = || Box::new(random_expr(&mut *rng, d, horizon, depth - 1));
    match op {
        0 => Expr::Neg(sub()),
        1 => Expr::Bin(BinOp::Add, sub(), sub()),
        2 => Expr::Bin(BinOp::Sub, sub(), sub()),
        3 => Expr::Bin(BinOp::Mul, sub(), sub()),
        4 => Expr::Bin(BinOp::Div, sub(), sub()),
        5 => Expr::Call(Func::Abs, vec![*sub()]),
        6 => Expr::Call(Func::Max, vec![*sub(), *sub()]),
        _ => Expr::Call(Func::Min, (0..3).map(|_| *sub()).collect()),
    }
}
