use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gazentropy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gazentropy")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two pages, three subjects; page "a" is concentrated, "b" scattered.
fn two_page_inputs(dir: &TempDir) -> (PathBuf, PathBuf) {
    let mut tsv = String::from("subject_id\tpage_id\tstart_ms\tduration_ms\tx\ty\n");
    for (k, subject) in ["s1", "s2", "s3"].iter().enumerate() {
        let k = k as f64;
        for (i, (x, y)) in [(300.0, 200.0), (320.0, 210.0), (900.0, 600.0)].iter().enumerate() {
            tsv += &format!("{subject}\ta\t{}\t{}\t{}\t{}\n", i * 400, 250 + 10 * i, x + 5.0 * k, y - 3.0 * k);
        }
        for (i, (x, y)) in [(100.0, 700.0), (1200.0, 50.0), (640.0, 400.0)].iter().enumerate() {
            tsv += &format!("{subject}\tb\t{}\t{}\t{}\t{}\n", i * 400, 300, x + 150.0 * k, y + 40.0 * k);
        }
    }
    let fix = dir.path().join("fixations.tsv");
    fs::write(&fix, tsv).unwrap();
    let rat = dir.path().join("ratings.csv");
    fs::write(&rat, "subject_id,page_id,verdict\ns1,a,good\ns2,a,good\ns3,a,bad\ns1,b,bad\ns2,b,bad\ns3,b,good\n")
        .unwrap();
    (fix, rat)
}

fn report_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn two_page_report_shape() {
    let dir = TempDir::new().unwrap();
    let (fix, rat) = two_page_inputs(&dir);
    let out = dir.path().join("report.json");
    let o = gazentropy(&["report", "--fixations", s(&fix), "--ratings", s(&rat), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = report_json(&out);
    let pages = v["pages"].as_array().unwrap();
    assert_eq!(pages.len(), 2);
    assert_eq!(pages[0]["page_id"], "a");
    assert!(pages[0]["rvae"].as_f64().unwrap() > 0.0);
    let m = v["correlations"]["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 5);
    assert!(m.iter().all(|row| row.as_array().unwrap().len() == 5));
    assert_eq!(v["correlations"]["labels"][4], "rVAE");
    assert_eq!(v["config"]["inputs"]["fixations"].as_str().unwrap().len(), 64);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let (fix, rat) = two_page_inputs(&dir);
    let run = |name: &str| {
        let out = dir.path().join(name);
        assert_eq!(code(&gazentropy(&["report", "--fixations", s(&fix), "--ratings", s(&rat), "--out", s(&out)])), 0);
        fs::read(out).unwrap()
    };
    assert_eq!(run("one.json"), run("two.json"));
}

#[test]
fn missing_page_rating_fails_and_names_page() {
    let dir = TempDir::new().unwrap();
    let (fix, _) = two_page_inputs(&dir);
    let rat = dir.path().join("partial.csv");
    fs::write(&rat, "subject_id,page_id,verdict\ns1,a,good\n").unwrap();
    let out = dir.path().join("report.json");
    let o = gazentropy(&["report", "--fixations", s(&fix), "--ratings", s(&rat), "--out", s(&out)]);
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("\"b\""), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let (fix, rat) = two_page_inputs(&dir);
    assert_eq!(code(&gazentropy(&["report", "--fixations", s(&fix)])), 1);
    assert_eq!(code(&gazentropy(&["frobnicate"])), 1);
    assert_eq!(code(&gazentropy(&["--help"])), 0);

    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "subject_id\tpage_id\tstart_ms\tduration_ms\tx\ty\ns1\ta\t0\t-5\t1\t1\n").unwrap();
    let o =
        gazentropy(&["report", "--fixations", s(&bad), "--ratings", s(&rat), "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let off = dir.path().join("off.tsv");
    fs::write(&off, "subject_id\tpage_id\tstart_ms\tduration_ms\tx\ty\ns1\ta\t0\t100\t-900\t-900\n").unwrap();
    let o = gazentropy(&["heatmap", "--fixations", s(&off), "--page", "a", "--out", s(&dir.path().join("h.pgm"))]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));

    let o = gazentropy(&[
        "report",
        "--fixations",
        s(&fix),
        "--ratings",
        s(&rat),
        "--out",
        s(&dir.path().join("y.json")),
        "--sigma=0",
    ]);
    assert_eq!(code(&o), 2);
}

fn pgm_pixels(bytes: &[u8]) -> (usize, usize, Vec<u8>) {
    let text_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
    let header = std::str::from_utf8(&bytes[..text_end]).unwrap();
    let dims: Vec<usize> = header.lines().nth(1).unwrap().split(' ').map(|v| v.parse().unwrap()).collect();
    (dims[0], dims[1], bytes[text_end..].to_vec())
}

#[test]
fn heatmap_brightest_pixel_and_subject_filter() {
    let dir = TempDir::new().unwrap();
    let (fix, _) = two_page_inputs(&dir);
    let pooled = dir.path().join("pooled.pgm");
    let single = dir.path().join("s1.pgm");
    assert_eq!(code(&gazentropy(&["heatmap", "--fixations", s(&fix), "--page", "b", "--out", s(&pooled)])), 0);
    let o = gazentropy(&["heatmap", "--fixations", s(&fix), "--page", "b", "--subject", "s1", "--out", s(&single)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (pooled, single) = (fs::read(pooled).unwrap(), fs::read(single).unwrap());
    assert_ne!(pooled, single);
    let (w, h, px) = pgm_pixels(&single);
    assert_eq!((w, h, px.len()), (1280, 800, 1280 * 800));
    // s1 on page b: three equal-duration fixations away from the borders.
    for (x, y) in [(100, 700), (1200, 50), (640, 400)] {
        assert_eq!(px[y * w + x], 255);
    }

    let one = dir.path().join("one.tsv");
    fs::write(&one, "subject_id\tpage_id\tstart_ms\tduration_ms\tx\ty\ns1\tq\t0\t200\t201\t77\n").unwrap();
    let out = dir.path().join("one.pgm");
    assert_eq!(code(&gazentropy(&["heatmap", "--fixations", s(&one), "--page", "q", "--out", s(&out)])), 0);
    let (w, _, px) = pgm_pixels(&fs::read(out).unwrap());
    // 8-bit quantisation turns the peak into a small plateau centred on it.
    let plateau: Vec<(f64, f64)> =
        px.iter().enumerate().filter(|(_, v)| **v == 255).map(|(i, _)| ((i % w) as f64, (i / w) as f64)).collect();
    let n = plateau.len() as f64;
    let cx = plateau.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = plateau.iter().map(|p| p.1).sum::<f64>() / n;
    assert_eq!(px[77 * w + 201], 255);
    assert!((cx - 201.0).abs() < 1e-9 && (cy - 77.0).abs() < 1e-9, "plateau centre ({cx}, {cy})");

    let o = gazentropy(&[
        "heatmap",
        "--fixations",
        s(&fix),
        "--page",
        "b",
        "--subject",
        "nobody",
        "--out",
        s(&dir.path().join("z.pgm")),
    ]);
    assert_eq!(code(&o), 2);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn synth_noise_ladder(dir: &Path, seed: &str) -> PathBuf {
    let spec = concat!(env!("CARGO_MANIFEST_DIR"), "/specs/noise_ladder.toml");
    let out = dir.join(format!("synth-{seed}"));
    let o = gazentropy(&["synth", "--spec", spec, "--seed", seed, "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn synth_noise_ladder_sizes_and_seed_dependence() {
    let dir = TempDir::new().unwrap();
    let a = synth_noise_ladder(dir.path(), "1");
    let ratings = fs::read_to_string(a.join("ratings.csv")).unwrap();
    assert_eq!(ratings.lines().count(), 1 + 40 * 30);
    let fixations = fs::read_to_string(a.join("fixations.tsv")).unwrap();
    let mut pairs: Vec<(&str, &str)> = fixations
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split('\t');
            (f.next().unwrap(), f.next().unwrap())
        })
        .collect();
    pairs.dedup();
    pairs.sort();
    pairs.dedup();
    assert_eq!(pairs.len(), 40 * 30);
    let again = synth_noise_ladder(dir.path(), "1");
    assert_eq!(fs::read(a.join("fixations.tsv")).unwrap(), fs::read(again.join("fixations.tsv")).unwrap());
    let b = synth_noise_ladder(dir.path(), "2");
    assert_ne!(fs::read(a.join("fixations.tsv")).unwrap(), fs::read(b.join("fixations.tsv")).unwrap());
}

#[test]
fn synth_rejects_bad_specs() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("zero.toml");
    fs::write(&spec, "subjects = 0\n[[pages]]\nid = \"p\"\nnoise = 1.0\nquality = \"bad\"\nfixations = 3\n").unwrap();
    let o = gazentropy(&["synth", "--spec", s(&spec), "--out-dir", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("subjects"), "{}", stderr(&o));
    fs::write(&spec, "subjects = 3\ncolour = 1\n").unwrap();
    assert_eq!(code(&gazentropy(&["synth", "--spec", s(&spec), "--out-dir", s(&dir.path().join("o"))])), 2);
}

const SMALL_SPEC: &str = r#"
screen = "640x400"
subjects = 8
span_ms = 2500
central_onset = 1

[[pages]]
id = "good"
noise = 0.1
quality = "good"
good_rate = 0.9
fixations = 12
random_hotspots = 2
hotspot_spread = 15
repeat = 3

[[pages]]
id = "bad"
noise = 0.8
quality = "bad"
good_rate = 0.1
fixations = 12
random_hotspots = 2
hotspot_spread = 15
repeat = 3
"#;

/// Synthetic output feeds every other command unchanged.
#[test]
fn pipeline_closes() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("small.toml");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let data = dir.path().join("data");
    assert_eq!(code(&gazentropy(&["synth", "--spec", s(&spec), "--seed", "4", "--out-dir", s(&data)])), 0);
    let fix = data.join("fixations.tsv");
    let rat = data.join("ratings.csv");
    let p = |n: &str| dir.path().join(n);
    let screen = ["--screen", "640x400"];

    let run = |args: &[&str]| {
        let o = gazentropy(&[args, &screen[..]].concat());
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    };
    run(&[
        "report",
        "--fixations",
        s(&fix),
        "--ratings",
        s(&rat),
        "--out",
        s(&p("r.json")),
        "--indices-csv",
        s(&p("i.csv")),
    ]);
    run(&["heatmap", "--fixations", s(&fix), "--page", "good-1", "--out", s(&p("h.pgm"))]);
    run(&[
        "aoi",
        "--fixations",
        s(&fix),
        "--page",
        "bad-3",
        "--out-aois",
        s(&p("a.tsv")),
        "--out-sequences",
        s(&p("q.tsv")),
    ]);
    run(&["sweep", "time", "--fixations", s(&fix), "--ratings", s(&rat), "--grid", "2500", "--out", s(&p("t.csv"))]);
    run(&[
        "sweep",
        "subjects",
        "--fixations",
        s(&fix),
        "--ratings",
        s(&rat),
        "--sizes",
        "2,8",
        "--repetitions",
        "3",
        "--seed",
        "5",
        "--out",
        s(&p("n1.csv")),
    ]);
    run(&[
        "sweep",
        "subjects",
        "--fixations",
        s(&fix),
        "--ratings",
        s(&rat),
        "--sizes",
        "2,8",
        "--repetitions",
        "3",
        "--seed",
        "5",
        "--out",
        s(&p("n2.csv")),
    ]);
    run(&["sweep", "sigma", "--fixations", s(&fix), "--ratings", s(&rat), "--grid", "20,20", "--out", s(&p("g.csv"))]);

    // A time sweep over the full span reproduces the report's correlations.
    let report = report_json(&p("r.json"));
    let row = csv_rows(&p("t.csv"));
    let m = &report["correlations"]["matrix"][0];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(1.0);
    assert!(close(row[0][1].parse().unwrap(), m[2].as_f64().unwrap()));
    assert!(close(row[0][2].parse().unwrap(), m[4].as_f64().unwrap()));
    assert_eq!(row[0][3], "6");

    assert_eq!(fs::read(p("n1.csv")).unwrap(), fs::read(p("n2.csv")).unwrap());
    let g = csv_rows(&p("g.csv"));
    assert_eq!(g[0], g[1]);

    let seqs = fs::read_to_string(p("q.tsv")).unwrap();
    assert_eq!(seqs.lines().count(), 1 + 8);
    assert_eq!(fs::read_to_string(p("i.csv")).unwrap().lines().count(), 1 + 6);
}
