use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn mvledger(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvledger"))
        .args(args)
        .env_remove("MVLEDGER_DATA_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mvledger(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = mvledger(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    assert!(out.stdout.is_empty());
    String::from_utf8(out.stderr).unwrap()
}

/// `(header, rows of (first cell, numbers))`
fn table(csv: &str) -> (Vec<String>, Vec<(String, Vec<f64>)>) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| {
            let mut cells = l.split(',');
            let key = cells.next().unwrap().to_string();
            (key, cells.map(|c| c.parse().unwrap()).collect())
        })
        .collect();
    (header, rows)
}

fn column(csv: &str, label: &str) -> Vec<f64> {
    let (header, rows) = table(csv);
    let j = header.iter().position(|h| h == label).unwrap() - 1;
    rows.iter().map(|(_, v)| v[j]).collect()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn adjust_reproduces_the_printed_adjusted_closes() {
    let q = fixture("xbi_quotes.csv");
    let dv = fixture("xbi_dividends.csv");
    let out = ok(&[
        "adjust",
        path(&q),
        "--dividends",
        path(&dv),
        "--label",
        "XBI",
        "--precision",
        "3",
    ]);
    let values: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(
        values,
        [
            "100.000", "123.018", "117.872", "118.003", "118.556", "123.594", "122.736", "146.628", "147.990",
            "144.973"
        ]
    );
    assert!(out.starts_with("date,XBI\n2013-12-31,"));
}

#[test]
fn adjust_without_events_rescales() {
    let out = ok(&["adjust", path(&fixture("swings.csv")), "--base", "1"]);
    assert_eq!(column(&out, "swings"), [1.0, 1.5, 0.5, 1.5, 1.25]);
}

#[test]
fn oversized_distribution_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let dv = dir.path().join("bad.csv");
    std::fs::write(&dv, "ex_date,amount\n2014-03-21,170\n").unwrap();
    let err = fails(&["adjust", path(&fixture("xbi_quotes.csv")), "--dividends", path(&dv)]);
    assert!(err.contains("prior close"), "{err}");
}

#[test]
fn december_portfolio_paths() {
    let dec = fixture("december.csv");
    let expected = std::fs::read_to_string(fixture("december_expected.csv")).unwrap();
    let uip = ok(&["paths", path(&dec), "--weights", "FBT=0.75,XBI=0.25", "--label", "UIP"]);
    let crp = ok(&[
        "paths",
        path(&dec),
        "--weights",
        path(&fixture("weights.csv")),
        "--mode",
        "reallocated",
        "--start",
        "143.490",
        "--label",
        "CRP",
    ]);
    for (csv, label) in [(&uip, "UIP"), (&crp, "CRP")] {
        for (a, b) in column(csv, label).iter().zip(column(&expected, label)) {
            assert!((a - b).abs() <= 0.0015, "{label}: {a} vs {b}");
        }
    }
    for mode in ["unattended", "reallocated", "longshort"] {
        let out = ok(&[
            "paths",
            path(&dec),
            "--weights",
            "FBT=1,XBI=0",
            "--mode",
            mode,
            "--start",
            "145.736",
        ]);
        for (a, b) in column(&out, "P").iter().zip(column(&out, "FBT")) {
            assert!((a - b).abs() < 1e-9, "{mode}: {a} vs {b}");
        }
    }
}

#[test]
fn short_weights_need_longshort_mode() {
    let dec = fixture("december.csv");
    let w = "FBT=1.25515,XBI=-0.25515";
    let err = fails(&["paths", path(&dec), "--weights", w]);
    assert!(err.contains("longshort"));
    let out = ok(&[
        "paths",
        path(&dec),
        "--weights",
        w,
        "--mode",
        "longshort",
        "--label",
        "ZNS",
    ]);
    let zns = column(&out, "ZNS");
    assert!((zns[0] - (1.25515 * 145.736 - 0.25515 * 135.477)).abs() < 1e-5);
    assert!(fails(&["paths", path(&dec), "--weights", "FBT=0.5,XBI=0.4"]).contains("sum"));
}

#[test]
fn identity_check_reports() {
    let out = ok(&["identity-check", path(&fixture("swings.csv")), "--ppy", "4"]);
    assert_eq!(
        out,
        "label,e_r,e_d,e0,e1,product_r_d,product_0_1\nA,1.6667,-1.2000,0.2500,0.2000,5.8667,1.0000\n"
    );
    let dir = tempfile::tempdir().unwrap();
    let geo = dir.path().join("geo.csv");
    std::fs::write(
        &geo,
        "date,G\n2014-01-01,100\n2014-01-02,110\n2014-01-03,121\n2014-01-04,133.1\n",
    )
    .unwrap();
    let (_, rows) = table(&ok(&["identity-check", path(&geo), "--ppy", "1", "--precision", "10"]));
    assert!((rows[0].1[4] - 1.0).abs() < 1e-9);
}

#[test]
fn moment_tables() {
    let dir = tempfile::tempdir().unwrap();
    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "date,C\n2014-01-01,100\n2014-01-02,100\n2014-01-03,100\n").unwrap();
    assert_eq!(
        ok(&["moments", path(&flat)]),
        "row,C\nE,0.0000\nsigma,0.0000\nC,0.0000\n"
    );
    assert_eq!(
        ok(&["moments", path(&fixture("swings.csv")), "--model", "linear"]),
        "row,A\nE0,0.2500\nsigma0,1.5155\nA,2.2969\n"
    );
    assert!(fails(&["moments", path(&flat), "--model", "quadratic"]).contains("quadratic"));
}

fn grid_variance(mean: &[f64; 3], cov: &[[f64; 3]; 3], target: f64) -> f64 {
    let mut best = f64::INFINITY;
    for g in 0..3 {
        let (i, j) = ((g + 1) % 3, (g + 2) % 3);
        for k in 0..=1000 {
            let pg = k as f64 / 1000.0;
            let pi = (target - pg * mean[g] - mean[j] * (1.0 - pg)) / (mean[i] - mean[j]);
            let mut p = [0.0; 3];
            p[g] = pg;
            p[i] = pi;
            p[j] = 1.0 - pg - pi;
            if p.iter().all(|x| *x >= -1e-12) {
                let v: f64 = (0..3)
                    .flat_map(|a| (0..3).map(move |b| (a, b)))
                    .map(|(a, b)| p[a] * cov[a][b] * p[b])
                    .sum();
                best = best.min(v);
            }
        }
    }
    best
}

#[test]
fn frontier_matches_a_grid_search() {
    let mean = [0.10, 0.25, 0.18];
    let cov = [[0.04, 0.006, -0.01], [0.006, 0.09, 0.012], [-0.01, 0.012, 0.0625]];
    let dir = tempfile::tempdir().unwrap();
    let mt = dir.path().join("moments.csv");
    let mut text = String::from("row,A,B,C\nE,0.10,0.25,0.18\nsigma,0.2,0.3,0.25\n");
    for (l, r) in ["A", "B", "C"].iter().zip(cov) {
        text.push_str(&format!("{l},{},{},{}\n", r[0], r[1], r[2]));
    }
    std::fs::write(&mt, text).unwrap();
    let out = ok(&["frontier", path(&mt), "--k", "6", "--precision", "12"]);
    let (header, rows) = table(&out);
    assert_eq!(header, ["target", "A", "B", "C", "e", "sigma"]);
    assert_eq!(rows.len(), 6);
    for (_, v) in rows {
        let (e, sigma) = (v[3], v[4]);
        assert!((v[0..3].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let g = grid_variance(&mean, &cov, e);
        assert!(
            sigma * sigma <= g + 1e-9 && g - sigma * sigma <= 1e-6,
            "e={e}: {} vs {g}",
            sigma * sigma
        );
    }

    let two = ok(&["frontier", path(&fixture("december.csv")), "--k", "2"]);
    let (_, rows) = table(&two);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1].1[..2], &[0.0, 1.0]);
}

#[test]
fn rounded_2014_covariance_is_rejected() {
    let err = fails(&["frontier", path(&fixture("rounded_2014_moments.csv"))]);
    assert!(err.contains("positive semidefinite"), "{err}");
}

#[test]
fn decompose_then_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let dec = fixture("december.csv");
    let p1 = dir.path().join("p1.csv");
    let p2 = dir.path().join("p2.csv");
    let bundle = dir.path().join("dec.bundle");
    ok(&[
        "paths",
        path(&dec),
        "--anchor",
        "2014-12-01",
        "--weights",
        "FBT=0.75,XBI=0.25",
        "--mode",
        "reallocated",
        "--label",
        "CRP",
        "--precision",
        "10",
        "--out",
        path(&p1),
    ]);
    ok(&[
        "paths",
        path(&p1),
        "--weights",
        "FBT=1.25515,XBI=-0.25515",
        "--mode",
        "longshort",
        "--label",
        "ZNS",
        "--precision",
        "10",
        "--out",
        path(&p2),
    ]);
    ok(&[
        "decompose",
        path(&p2),
        "--pivots",
        "FBT-XBI,FBT,CRP",
        "--keep",
        "FBT,XBI,ZNS,CRP",
        "--legend",
        "U: orthonormal risk vectors",
        "--out",
        path(&bundle),
    ]);
    let text = std::fs::read_to_string(&bundle).unwrap();
    assert!(text.starts_with("#U,21,3\n"));
    assert!(text.ends_with("#legend\nU: orthonormal risk vectors\n"));
    let back = ok(&["reconstruct", path(&bundle), "--precision", "10"]);
    let orig = std::fs::read_to_string(&p2).unwrap();
    for l in ["FBT", "XBI", "ZNS", "CRP"] {
        for (a, b) in column(&back, l).iter().zip(column(&orig, l)) {
            assert!(((a - b) / b).abs() < 1e-6, "{l}: {a} vs {b}");
        }
    }
}

#[test]
fn unknown_pivot_is_reported() {
    let err = fails(&["decompose", path(&fixture("december.csv")), "--pivots", "FBT-QQQ"]);
    assert!(err.contains("QQQ"), "{err}");
}

#[test]
fn plots() {
    let prices = ok(&["plot", "prices", path(&fixture("december4.csv"))]);
    assert_eq!(prices.matches("<polyline").count(), 4);
    for l in ["FBT", "XBI", "UIP", "CRP"] {
        assert!(prices.contains(&format!(r#"<polyline data-label="{l}""#)));
    }

    let esig = ok(&["plot", "esig", path(&fixture("rounded_2014_moments.csv"))]);
    for l in ["FBT", "XBI", "UIP", "UIP2", "UIP3"] {
        assert!(esig.contains(&format!(r#"<circle data-label="{l}""#)), "{l}");
    }
    let from_panel = ok(&["plot", "esig", path(&fixture("december.csv")), "--points", "11"]);
    assert_eq!(from_panel.matches("<polyline").count(), 2);

    let plane = ok(&["plot", "riskplane", path(&fixture("printed_coordinates.bundle"))]);
    let attr = |tag: &str, name: &str| -> String {
        let line = plane.lines().find(|l| l.contains(tag)).unwrap();
        let start = line.find(&format!(r#" {name}=""#)).unwrap() + name.len() + 3;
        line[start..].split('"').next().unwrap().to_string()
    };
    assert_eq!(attr(r#"id="y-axis""#, "x1"), attr(r#"data-label="ZNS""#, "cx"));
    assert_ne!(attr(r#"id="y-axis""#, "x1"), attr(r#"data-label="CRP""#, "cx"));

    assert_eq!(
        plane,
        ok(&["plot", "riskplane", path(&fixture("printed_coordinates.bundle"))])
    );
    let err = mvledger(&["plot", "bars", path(&fixture("december.csv"))]);
    assert!(!err.status.success());
}

#[test]
fn normalize_and_panel() {
    let out = ok(&["normalize", path(&fixture("december.csv")), "--anchor", "2014-12-31"]);
    assert!(out.lines().last().unwrap().ends_with(",100.00000,100.00000"));
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.csv");
    std::fs::write(&other, "Date,Open,High,Low,Close,Adj Close,Volume\n2014-03-20,1,1,1,80,40,1\n2014-03-21,1,1,1,90,45,1\n2014-06-19,1,1,1,99,50,1\n").unwrap();
    let out = ok(&[
        "panel",
        &format!("XBI={}", path(&fixture("xbi_quotes.csv"))),
        path(&other),
    ]);
    assert_eq!(
        out,
        "date,XBI,other\n2014-03-20,100.00000,100.00000\n2014-03-21,95.61716,112.50000\n2014-06-19,95.72329,125.00000\n"
    );
}

#[test]
fn data_dir_resolves_relative_inputs() {
    let out = Command::new(env!("CARGO_BIN_EXE_mvledger"))
        .args(["identity-check", "swings.csv", "--ppy", "4"])
        .env("MVLEDGER_DATA_DIR", fixture(""))
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("5.8667"));
    assert!(fails(&["identity-check", "definitely-missing.csv"]).contains("cannot read"));
}

#[test]
fn output_file_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("m.csv");
    let dec = fixture("december4.csv");
    ok(&["moments", path(&dec), "--out", path(&target)]);
    let first = std::fs::read(&target).unwrap();
    assert_eq!(first, ok(&["moments", path(&dec)]).into_bytes());
}
