use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evoworld_core::engine::checkpoint;
use evoworld_core::metrics::{read_series, HEADER};
use evoworld_core::neural::Tensor;
use evoworld_core::scenarios::rule110::build_rule110;
use evoworld_core::scenarios::{file, Fragment, InertAgent};
use evoworld_core::{ActionVector, SimConfig, WorldState};
use image::RgbImage;

fn evoworld(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evoworld")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small world so runs take milliseconds.
fn small_config(dir: &Path) -> PathBuf {
    let cfg = SimConfig { grid_size: 32, max_agents: 16, num_robots: 4, k_bot_substeps: 2, ..SimConfig::default() };
    let p = dir.join("small.toml");
    std::fs::write(&p, cfg.to_toml_string()).unwrap();
    p
}

fn read_png(p: &Path) -> RgbImage {
    image::open(p).unwrap().to_rgb8()
}

#[test]
fn zero_steps_writes_header_and_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("o");
    let o = evoworld(&["run", "--config", s(&cfg), "--seed", "5", "--steps", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(csv, format!("{}\n", HEADER.join(",")));
    let w = checkpoint::load(&out.join("ckpt_0.jxlf")).unwrap();
    assert_eq!(w.step, 0);
    assert_eq!(w.checksum(), WorldState::init(&SimConfig::load(&cfg).unwrap(), 5).checksum());
}

#[test]
fn runs_are_repeatable_and_resumable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["run", "--steps", "40", "--metrics-every", "5", "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = evoworld(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let cfg_args = ["--config", s(&cfg), "--seed", "3", "--checkpoint-every", "20"];
    let a = run("a", &cfg_args);
    let b = run("b", &cfg_args);
    let csv_a = std::fs::read(a.join("metrics.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("metrics.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("ckpt_40.jxlf")).unwrap(), std::fs::read(b.join("ckpt_40.jxlf")).unwrap());
    let rows = read_series(csv_a.as_slice()).unwrap();
    assert_eq!(rows.iter().map(|r| r.step).collect::<Vec<_>>(), vec![5, 10, 15, 20, 25, 30, 35, 40]);

    // 20 + 20 from the intermediate checkpoint lands on the same state
    let ck = a.join("ckpt_20.jxlf");
    let out = dir.path().join("resumed");
    let o = evoworld(&["run", "--resume", s(&ck), "--steps", "20", "--metrics-every", "5", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(out.join("ckpt_40.jxlf")).unwrap(), std::fs::read(a.join("ckpt_40.jxlf")).unwrap());
    let resumed = read_series(std::fs::read(out.join("metrics.csv")).unwrap().as_slice()).unwrap();
    assert_eq!(resumed[..], rows[4..]);
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut outs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_evoworld"))
            .env("EVOWORLD_THREADS", threads)
            .args(["run", "--config", s(&cfg), "--steps", "25", "--metrics-every", "5", "--out", s(&out)])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outs.push(std::fs::read(out.join("ckpt_25.jxlf")).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "grid_size = 32\nwarp_drive = true\n").unwrap();
    let o = evoworld(&["run", "--config", s(&bad), "--steps", "1", "--out", s(&dir.path().join("x"))]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let o = evoworld(&["run", "--config", s(&dir.path().join("missing.toml")), "--steps", "1"]);
    assert_eq!(code(&o), 1);

    // output "directory" is a file
    let cfg = small_config(dir.path());
    let o = evoworld(&["run", "--config", s(&cfg), "--steps", "1", "--out", s(&cfg)]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = evoworld(&["render", "--checkpoint", s(&cfg), "--out", s(&dir.path().join("x.png"))]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn numeric_abort_dumps_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig { grid_size: 32, max_agents: 8, num_robots: 2, ..SimConfig::default() };
    let mut w = WorldState::init(&cfg, 1);
    let shape = w.shape;
    w.agents[2].params.tensor_mut(&shape, Tensor::OutB)[0] = f32::NAN;
    let ck = dir.path().join("poisoned.jxlf");
    checkpoint::save(&w, &ck).unwrap();
    let out = dir.path().join("o");
    let o = evoworld(&["run", "--resume", s(&ck), "--steps", "5", "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("dump_0.jxlf"), "{err}");
    assert!(checkpoint::load(&out.join("dump_0.jxlf")).is_ok());
}

#[test]
fn help_lists_defaults() {
    let o = evoworld(&["run", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for flag in ["--config", "--seed", "--steps", "--out", "--metrics-every", "--checkpoint-every", "--render-every"] {
        assert!(text.contains(flag), "{flag} missing from\n{text}");
    }
    assert!(text.contains("[default: 1000]") && text.contains("[default: 64]"), "{text}");
    let o = evoworld(&["verify", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("rule110") && text.contains("--report"), "{text}");
    assert!(!text.contains("corrupt"));
}

fn write_scenario(dir: &Path, name: &str, frag: &Fragment) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, file::to_text(frag)).unwrap();
    p
}

#[test]
fn render_marks_entities() {
    let dir = tempfile::tempdir().unwrap();
    // terrain only (a lone bit)
    let mut f = Fragment::new(16);
    f.bits.push(([3, 4], true));
    let scn = write_scenario(dir.path(), "empty.scn", &f);
    let out = dir.path().join("e");
    let o = evoworld(&["scenario", "--file", s(&scn), "--steps", "0", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let png = dir.path().join("e.png");
    let o = evoworld(&["render", "--checkpoint", s(&out.join("ckpt_0.jxlf")), "--out", s(&png)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let img = read_png(&png);
    assert_eq!(img.dimensions(), (16, 16));
    assert!(img.pixels().all(|p| p.0[0] == 0), "terrain pixels have no red");
    let o = evoworld(&["render", "--checkpoint", s(&out.join("ckpt_0.jxlf")), "--out", s(&png), "--bits"]);
    assert_eq!(code(&o), 0);
    let img = read_png(&png);
    let white: Vec<(u32, u32)> = img.enumerate_pixels().filter(|(_, _, p)| p.0 == [255; 3]).map(|(x, y, _)| (x, y)).collect();
    assert_eq!(white, vec![(3, 4)]);

    // one agent in cell (5, 7), one robot in cell (12, 2)
    let mut f = Fragment::new(16);
    f.agents.push(InertAgent { pos: [5.5, 7.25], energy: 10.0, message: ActionVector::ZERO });
    f.robot([12.75, 2.5], ActionVector::ZERO, ActionVector::ZERO);
    let scn = write_scenario(dir.path(), "one.scn", &f);
    let out = dir.path().join("one");
    assert_eq!(code(&evoworld(&["scenario", "--file", s(&scn), "--steps", "0", "--out", s(&out)])), 0);
    let o = evoworld(&["render", "--checkpoint", s(&out.join("ckpt_0.jxlf")), "--out", s(&png), "--scale", "2"]);
    assert_eq!(code(&o), 0);
    let img = read_png(&png);
    assert_eq!(img.dimensions(), (32, 32));
    let of = |rgb: [u8; 3]| -> Vec<(u32, u32)> {
        img.enumerate_pixels().filter(|(_, _, p)| p.0 == rgb).map(|(x, y, _)| (x, y)).collect()
    };
    let red = of([255, 0, 0]);
    assert_eq!(red.len(), 9);
    assert!(red.contains(&(11, 14)) && red.contains(&(10, 13)) && red.contains(&(12, 15)));
    let grey = of([128, 128, 128]);
    assert_eq!(grey.len(), 9);
    assert!(grey.contains(&(25, 5)));
}

#[test]
fn rule110_bits_match_oracle_raster() {
    let dir = tempfile::tempdir().unwrap();
    let width = 24;
    let steps = 20;
    let mut init = vec![false; width];
    init[width - 2] = true;
    let scn = write_scenario(dir.path(), "r110.scn", &build_rule110(&init, 32).unwrap());
    let out = dir.path().join("r");
    let o = evoworld(&["scenario", "--file", s(&scn), "--steps", &steps.to_string(), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let png = dir.path().join("r.png");
    let ck = out.join(format!("ckpt_{steps}.jxlf"));
    assert_eq!(code(&evoworld(&["render", "--checkpoint", s(&ck), "--out", s(&png), "--bits"])), 0);
    let img = read_png(&png);

    // oracle raster: generation t in row t, cell i in column i + 1
    let mut row = init.clone();
    let mut raster = vec![vec![false; 32]; 32];
    for t in 0..=steps {
        for (i, &b) in row.iter().enumerate() {
            raster[t][i + 1] = b;
        }
        row = (0..width)
            .map(|i| {
                let l = i > 0 && row[i - 1];
                let r = i + 1 < width && row[i + 1];
                let pattern = (l as u8) << 2 | (row[i] as u8) << 1 | r as u8;
                (110u8 >> pattern) & 1 == 1
            })
            .collect();
    }
    // robots sit on row `steps` and cover one row either side
    for y in 0..steps - 1 {
        for x in 0..32 {
            let white = img.get_pixel(x as u32, y as u32).0 == [255; 3];
            assert_eq!(white, raster[y][x], "pixel ({x}, {y})");
        }
    }
}

#[test]
fn transporter_frames_show_displacement() {
    let dir = tempfile::tempdir().unwrap();
    let scn = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/transporter.scn");
    let out = dir.path().join("t");
    let o = evoworld(&["scenario", "--file", s(&scn), "--steps", "30", "--render-every", "10", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut xs = Vec::new();
    for step in [0, 10, 20, 30] {
        let img = read_png(&out.join(format!("frame_{step}.png")));
        let red: Vec<u32> = img.enumerate_pixels().filter(|(_, _, p)| p.0 == [255, 0, 0]).map(|(x, _, _)| x).collect();
        assert_eq!(red.len(), 9, "frame {step}");
        xs.push(red.iter().sum::<u32>() / 9);
    }
    assert_eq!(xs, vec![2, 12, 22, 32]);
}

#[test]
fn shipped_scenarios_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let f = file::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        assert!(f.into_world(&SimConfig::default()).is_ok());
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn scenario_errors() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.scn");
    let zeros = " 0".repeat(16);
    let mut lines = vec!["grid 16".to_string(), "# comment".into()];
    lines.extend(std::iter::repeat(format!("robot 1 1 program{zeros} memory{zeros}")).take(4));
    lines.push("robot 2 2 program 1 1".into());
    std::fs::write(&p, lines.join("\n")).unwrap();
    let o = evoworld(&["scenario", "--file", s(&p), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("parse error: line 7"), "{}", stderr(&o));

    std::fs::write(&p, "").unwrap();
    let o = evoworld(&["scenario", "--file", s(&p), "--out", s(&dir.path().join("o"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("no entities"), "{}", stderr(&o));

    let o = evoworld(&["scenario", "--file", s(&dir.path().join("nope.scn"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn verify_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r110.txt");
    let o = evoworld(&["verify", "rule110", "--random", "5", "--report", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("rule110 PASS (6 checks, 0 failed)"), "{text}");
    assert!(text.contains("[ok] width 61, centred 1, 100 steps: 0 mismatches"), "{text}");

    let o = evoworld(&["verify", "machines"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let o = evoworld(&["verify", "nand", "--random", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    let report = dir.path().join("nand.txt");
    let o = evoworld(&["verify", "nand", "--random", "3", "--corrupt-table", "--report", s(&report)]);
    assert_eq!(code(&o), 4);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("nand FAIL"), "{text}");
    assert!(text.contains("[FAIL] 2-input table 0111: input row 3 (11)"), "{text}");
}
