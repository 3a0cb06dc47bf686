use std::path::Path;
use std::process::{Command, Output};

use splitadmm::model::Algorithm;
use splitadmm::numkern::DenseMatrix;
use splitadmm::problems::bp::BpInstance;
use splitadmm_cli::bench::{self, RunSpec};
use splitadmm_cli::instance::{BpSpec, ProblemSpec, RpcaSpec};
use splitadmm_cli::matfile;
use splitadmm_cli::{solve, Instance, Preset, SolveOptions};
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitadmm")).args(args).output().unwrap()
}

fn bin_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splitadmm")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Fields of the data row of a `--format csv` solve summary.
fn summary_fields(o: &Output) -> Vec<String> {
    stdout(o).lines().nth(1).unwrap().split(',').map(String::from).collect()
}

fn desk_bp(seed: u64) -> Instance {
    ProblemSpec::Bp(BpSpec::default()).generate(seed).unwrap()
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let tmp = TempDir::new().unwrap();
    for out in ["a", "b"] {
        let o = bin_in(tmp.path(), &["gen", "bp", "--n", "12", "--p", "40", "--seed", "9", "--out", out]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).contains("bp n=12 p=40"));
    }
    for f in ["instance.txt", "a.mat", "b.mat", "x_true.mat"] {
        let a = std::fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let o = bin_in(tmp.path(), &["gen", "bp", "--n", "12", "--p", "40", "--seed", "10", "--out", "c"]);
    assert_eq!(code(&o), 0);
    assert_ne!(std::fs::read(tmp.path().join("a/a.mat")).unwrap(), std::fs::read(tmp.path().join("c/a.mat")).unwrap());
}

#[test]
fn large_bp_truth_has_sixty_nonzeros() {
    let tmp = TempDir::new().unwrap();
    let spec = ProblemSpec::Bp(BpSpec { n: 300, p: 1000, sparsity: 0.06 });
    spec.generate(1).unwrap().save(tmp.path(), Some(1)).unwrap();
    let (x, _) = matfile::read(&tmp.path().join("x_true.mat")).unwrap();
    assert_eq!(x.shape(), (1000, 1));
    assert_eq!(x.as_slice().iter().filter(|v| **v != 0.0).count(), 60);
}

#[test]
fn rpca_mask_file_has_sampled_count() {
    let tmp = TempDir::new().unwrap();
    let o =
        bin_in(tmp.path(), &["gen", "rpca", "--rows", "20", "--cols", "15", "--sampling-ratio", "0.8", "--out", "r"]);
    assert_eq!(code(&o), 0);
    let (mask, kind) = matfile::read(&tmp.path().join("r/mask.mat")).unwrap();
    assert_eq!(kind, matfile::Kind::Mask);
    assert_eq!(mask.as_slice().iter().filter(|v| **v == 1.0).count(), 240);
}

#[test]
fn instances_round_trip_through_files() {
    let tmp = TempDir::new().unwrap();
    for (i, spec) in [
        ProblemSpec::Bp(BpSpec { n: 5, p: 9, sparsity: 0.2 }),
        ProblemSpec::Lvggms(Default::default()),
        ProblemSpec::Rpca(RpcaSpec { rows: 8, cols: 6, rank: 2, ..Default::default() }),
    ]
    .into_iter()
    .enumerate()
    {
        let dir = tmp.path().join(i.to_string());
        let inst = spec.generate(3).unwrap();
        inst.save(&dir, Some(3)).unwrap();
        let back = Instance::load(&dir.join("instance.txt")).unwrap();
        assert_eq!(format!("{inst:?}"), format!("{back:?}"));
    }
}

fn write_bp(dir: &Path, a: DenseMatrix, b: Vec<f64>, x_true: Vec<f64>) {
    let mut inst = BpInstance::new(a, b).unwrap();
    inst.x_planted = Some(x_true);
    Instance::Bp(inst).save(dir, None).unwrap();
}

#[test]
fn trivial_instance_summary() {
    let tmp = TempDir::new().unwrap();
    write_bp(tmp.path(), DenseMatrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]).unwrap(), vec![0.0, 0.0], vec![0.0, 0.0]);
    let o = bin(&["solve", tmp.path().to_str().unwrap(), "--algo", "psadmm", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let f = summary_fields(&o);
    assert_eq!(f[4], "converged");
    assert_eq!(f[5], "1");
    assert_eq!(f[8].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("bp");
    desk_bp(2).save(&dir, Some(2)).unwrap();
    let d = dir.to_str().unwrap();
    assert_eq!(code(&bin(&["solve", d, "--algo", "multadmm"])), 0);
    assert_eq!(code(&bin(&["solve", d, "--algo", "psadmm", "--m", "2", "--max-iter", "5"])), 2);
    assert_eq!(code(&bin(&["solve", d, "--algo", "simplex"])), 64);
    assert_eq!(code(&bin(&["solve", d])), 64);
    assert_eq!(code(&bin(&["frobnicate"])), 64);
    assert_eq!(code(&bin(&["--help"])), 0);
    assert_eq!(code(&bin(&["solve", tmp.path().join("missing").to_str().unwrap(), "--algo", "psadmm"])), 1);

    // A single badly scaled column: the coordinate step overflows.
    let bad = tmp.path().join("bad");
    write_bp(&bad, DenseMatrix::from_rows(&[[1e-150]]).unwrap(), vec![1e300], vec![1.0]);
    assert_eq!(code(&bin(&["solve", bad.to_str().unwrap(), "--algo", "multadmm", "--beta", "1"])), 3);
}

#[test]
fn tolerance_stops_at_first_qualifying_iterate() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("bp");
    desk_bp(4).save(&dir, Some(4)).unwrap();
    let trace = tmp.path().join("trace.csv");
    let o = bin(&[
        "solve",
        dir.to_str().unwrap(),
        "--algo",
        "psadmm",
        "--m",
        "5",
        "--tol",
        "1e-3",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let inst = Instance::load(&dir).unwrap();
    let Instance::Bp(b) = &inst else { unreachable!() };
    let b_scale = splitadmm::numkern::norm2(&b.b).max(1.0);
    let mut rdr = csv::Reader::from_path(&trace).unwrap();
    let rows: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[2].parse().unwrap(), r[3].parse().unwrap())
        })
        .collect();
    let hits: Vec<usize> = rows
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, (res, err))| *err <= 1e-3 && res / b_scale <= 1e-3)
        .map(|(k, _)| k)
        .collect();
    assert_eq!(hits, vec![rows.len() - 1]);
}

#[test]
fn multi_block_needs_fewer_iterations_than_two_block_primal_split() {
    for seed in 0..3 {
        let inst = desk_bp(seed);
        let run = |alg, m| {
            let opts = SolveOptions { m: Some(m), ..SolveOptions::new(alg) };
            solve(&inst, &opts).unwrap()
        };
        let mb = run(Algorithm::MultiBlock, 200);
        let ps = run(Algorithm::PrimalSplit, 2);
        assert!(mb.iterations < ps.iterations, "seed {seed}: {} vs {}", mb.iterations, ps.iterations);
    }
}

#[test]
fn solve_is_deterministic_apart_from_time() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("bp");
    desk_bp(6).save(&dir, Some(6)).unwrap();
    let strip = |path: &Path| -> Vec<String> {
        std::fs::read_to_string(path).unwrap().lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
    };
    let mut traces = Vec::new();
    for name in ["t1.csv", "t2.csv"] {
        let out = tmp.path().join(name);
        let o = bin(&["solve", dir.to_str().unwrap(), "--algo", "dsadmm", "--m", "5", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        traces.push(strip(&out));
    }
    assert_eq!(traces[0], traces[1]);
}

const GRID: &str = r#"
repetitions = 3
seed = 11
tolerances = [1e-3]
preset = "scaled"

[problem]
kind = "bp"
n = 30
p = 100

[[cells]]
algo = "dsadmm"
m = 4
"#;

#[test]
fn bench_means_match_hand_averaged_solves() {
    let tmp = TempDir::new().unwrap();
    let rows = bench::run_grid(&RunSpec::from_toml(GRID).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    let (mut iters, mut objs, mut errs) = (0.0, 0.0, 0.0);
    for seed in 11..14u64 {
        let dir = tmp.path().join(seed.to_string());
        let s = seed.to_string();
        assert_eq!(
            code(&bin(&["gen", "bp", "--n", "30", "--p", "100", "--seed", &s, "--out", dir.to_str().unwrap()])),
            0
        );
        let o = bin(&[
            "solve",
            dir.to_str().unwrap(),
            "--algo",
            "dsadmm",
            "--m",
            "4",
            "--preset",
            "scaled",
            "--format",
            "csv",
        ]);
        let f = summary_fields(&o);
        iters += f[5].parse::<f64>().unwrap();
        objs += f[6].parse::<f64>().unwrap();
        errs += f[8].parse::<f64>().unwrap();
    }
    let r = &rows[0];
    assert!((r.iterations() - iters / 3.0).abs() <= 1e-12 * r.iterations());
    assert!((r.objective() - objs / 3.0).abs() <= 1e-12 * r.objective().abs());
    assert!((r.error().unwrap() - errs / 3.0).abs() <= 1e-12 * r.error().unwrap());
}

#[test]
fn single_cell_bench_is_a_solve() {
    let spec = RunSpec::from_toml(&GRID.replace("repetitions = 3", "repetitions = 1")).unwrap();
    let rows = bench::run_grid(&spec).unwrap();
    let inst = spec.problem.generate(11).unwrap();
    let opts = SolveOptions { m: Some(4), preset: Preset::Scaled, ..SolveOptions::new(Algorithm::DualSplit) };
    let out = solve(&inst, &opts).unwrap();
    assert_eq!(rows[0].runs[0].iterations, out.iterations);
    assert_eq!(rows[0].objective(), out.objective);
    assert_eq!(rows[0].error(), out.error);
}

#[test]
fn bench_marks_unconverged_cells_and_writes_files() {
    let tmp = TempDir::new().unwrap();
    let spec_path = tmp.path().join("grid.toml");
    std::fs::write(&spec_path, format!("max_iter = 3\n{GRID}")).unwrap();
    let out = tmp.path().join("out");
    let o = bin(&["bench", spec_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().contains("3.0~"), "{text}");
    let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",0,3,~"), "{csv}");
    assert!(out.join("cells/dsadmm-m4-tol1e-3.csv").exists());
}

#[test]
fn bench_output_does_not_depend_on_thread_count() {
    let tmp = TempDir::new().unwrap();
    let spec_path = tmp.path().join("grid.toml");
    std::fs::write(&spec_path, GRID.replace("[[cells]]", "[[cells]]\nalgo = \"multadmm\"\n\n[[cells]]")).unwrap();
    let run = |threads: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_splitadmm"))
            .env("SPLITADMM_THREADS", threads)
            .args(["bench", spec_path.to_str().unwrap(), "--format", "csv"])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        // Drop the time column.
        stdout(&o)
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(5);
                f.join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn check_reports_by_method() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("bp");
    ProblemSpec::Bp(BpSpec { n: 20, p: 60, sparsity: 0.06 }).generate(5).unwrap().save(&dir, Some(5)).unwrap();
    let d = dir.to_str().unwrap();

    let csv_path = tmp.path().join("bound.csv");
    let o = bin(&["check", d, "--algo", "psadmm", "--m", "2", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("bound        ok"));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 301);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",false")));

    let o = bin(&["check", d, "--algo", "dsadmm", "--m", "3"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("t-identity   ok"));
    assert!(stdout(&o).contains("lyapunov     ok"));

    let o = bin(&["check", d, "--algo", "multadmm", "--max-iter", "20"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).matches("not applicable").count(), 4);
}
