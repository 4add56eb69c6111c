use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const TINY: &str = "\
# small end-to-end run
seed = 5
data.class.0 = gaussian(-2, 0, 0.25)
data.class.1 = gaussian(2, 0, 0.25)
data.samples_per_class = 600
data.reference_samples = 128
denoiser.hidden = 32,32
denoiser.steps = 200
generator.steps = 100
generator.batch = 64
classifier.steps = 100
sds.iters = 12
sds.eval_every = 5
sds.eval_samples = 64
sds.probe_iters = 5
";

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sdsforge"));
    cmd.env("SDSFORGE_LOG", "quiet");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn sdsforge")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_of_failure(args: &[&str]) -> String {
    let out = run(args);
    assert!(!out.status.success());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    err
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
    cfg: PathBuf,
}

impl Fixture {
    fn new(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, format!("{TINY}{extra}")).unwrap();
        let f = Self { dir, cfg };
        ok(&["train-denoiser", "--config", s(&f.cfg), "--out", s(f.dir.path())]);
        ok(&["pretrain-generator", "--config", s(&f.cfg), "--out", s(f.dir.path())]);
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn models(&self) -> [String; 4] {
        [
            "--gen".into(),
            s(&self.path("generator.ckpt")).into(),
            "--den".into(),
            s(&self.path("denoiser.ckpt")).into(),
        ]
    }

    fn adapt(&self, out: &str) -> PathBuf {
        let out = self.path(out);
        let m = self.models();
        ok(&["adapt", "--config", s(&self.cfg), &m[0], &m[1], &m[2], &m[3], "--out", s(&out)]);
        out
    }
}

fn iterations(csv: &str) -> Vec<usize> {
    csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect()
}

#[test]
fn adapt_writes_artifacts_and_is_reproducible() {
    let f = Fixture::new("");
    let a = f.adapt("a");
    let b = f.adapt("b");
    for name in ["report.csv", "adapted.ckpt", "config.echo", "scatter_00000.svg", "scatter_00012.svg"] {
        let x = fs::read(a.join(name)).unwrap();
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert!(a.join("scatter_00003.svg").exists() && a.join("scatter_00006.svg").exists());
    assert!(fs::read_to_string(a.join("timing.txt")).unwrap().starts_with("wall_clock_seconds = "));
    let report = fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(iterations(&report), vec![0, 5, 10, 12]);

    let m = f.models();
    let ranking = ok(&["select-layers", "--config", s(&f.cfg), &m[0], &m[1], &m[2], &m[3]]);
    let lines: Vec<&str> = ranking.lines().collect();
    assert_eq!(lines[0], "rank,layer,magnitude,selected");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines.iter().filter(|l| l.ends_with(",true")).count(), 4);

    let row = ok(&["evaluate", "--config", s(&f.cfg), &m[0], &m[1], &m[2], &m[3]]);
    assert_eq!(row.lines().count(), 2);
    assert_eq!(row.lines().next(), report.lines().next());
    assert_eq!(row.lines().nth(1), report.lines().nth(1));
}

#[test]
fn zero_iterations_gives_one_row() {
    let f = Fixture::new("");
    let mut text = fs::read_to_string(&f.cfg).unwrap();
    text = text.replace("sds.iters = 12", "sds.iters = 0");
    fs::write(&f.cfg, text).unwrap();
    let out = f.adapt("zero");
    let report = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(iterations(&report), vec![0]);
}

#[test]
fn sweep_writes_one_stanza_per_value() {
    let f = Fixture::new("");
    let out = f.path("sweep");
    let m = f.models();
    ok(&[
        "sweep", "--config", s(&f.cfg), "--param", "T_max", "--values", "300,500,750", &m[0], &m[1], &m[2], &m[3],
        "--out", s(&out),
    ]);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("param,value,iteration,"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    for (i, v) in ["300", "500", "750"].iter().enumerate() {
        let stanza: Vec<usize> =
            rows.iter().filter(|r| r[1] == *v).map(|r| r[2].parse().unwrap()).collect();
        assert_eq!(stanza, vec![0, 5, 10, 12], "value {v}");
        assert!(rows[i * 4..(i + 1) * 4].iter().all(|r| r[0] == "sds.t_max" && r[1] == *v));
        assert!(out.join(format!("sds.t_max={v}")).join("report.csv").exists());
    }
}

#[test]
fn diagnostics_name_the_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.cfg");
    let err = stderr_of_failure(&["train-denoiser", "--config", s(&missing), "--out", s(dir.path())]);
    assert!(err.starts_with("error: ") && err.contains("nope.cfg"), "{err}");

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "seed = 1\n# fine\nsds.lr 0.1\n").unwrap();
    let err = stderr_of_failure(&["train-denoiser", "--config", s(&bad), "--out", s(dir.path())]);
    assert!(err.contains("bad.cfg:3"), "{err}");

    fs::write(&bad, "seed = 1\nsds.k = 9\n").unwrap();
    let err = stderr_of_failure(&["train-denoiser", "--config", s(&bad), "--out", s(dir.path())]);
    assert!(err.contains("bad.cfg:2") && err.contains("sds.k"), "{err}");

    fs::write(&bad, "seed = 1\nsds.nonsense = 9\n").unwrap();
    let err = stderr_of_failure(&["train-denoiser", "--config", s(&bad), "--out", s(dir.path())]);
    assert!(err.contains("bad.cfg:2") && err.contains("sds.nonsense"), "{err}");

    let good = dir.path().join("good.cfg");
    fs::write(&good, TINY).unwrap();
    let ckpt = dir.path().join("old.ckpt");
    fs::write(&ckpt, "SDSFORGE-CKPT v0\n").unwrap();
    let err = stderr_of_failure(&[
        "evaluate", "--config", s(&good), "--gen", s(&ckpt), "--den", s(&ckpt),
    ]);
    assert!(err.contains("old.ckpt:1"), "{err}");
}
