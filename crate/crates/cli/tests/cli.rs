use std::path::Path;
use std::process::{Command, Output};

use tempofuse::write_frame;
use tempofuse_core::FrameBuffer;

fn tempofuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tempofuse"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn write_sequence(dir: &Path, n: usize, w: usize, h: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..n {
        let frame = FrameBuffer::from_fn(w, h, |x, y| {
            let v = ((x + 3 * y + 5 * i) % 11) as f64 / 10.0;
            [v, 0.5, 1.0 - v]
        })
        .unwrap();
        write_frame(&frame, &dir.join(format!("frame_{i:03}.png")), 8).unwrap();
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn video_writes_one_output_per_frame() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, out) = (tmp.path().join("in"), tmp.path().join("out"));
    write_sequence(&input, 5, 20, 12);
    let pattern = format!("{}/*.png", input.display());
    let res = tempofuse(&["--input", &pattern, "--output", s(&out), "--tau", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut names: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["R_000000.png", "R_000001.png", "R_000002.png", "R_000003.png", "R_000004.png"]);
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("virtual exposure time 0.1000 s"), "{stderr}");
}

#[test]
fn tau_zero_reproduces_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, out) = (tmp.path().join("in"), tmp.path().join("out"));
    write_sequence(&input, 3, 16, 9);
    let res = tempofuse(&["--input", s(&input), "--output", s(&out), "--tau", "0"]);
    assert!(res.status.success());
    for i in 0..3 {
        let a = tempofuse::decode_frame(&input.join(format!("frame_{i:03}.png"))).unwrap();
        let b = tempofuse::decode_frame(&out.join(format!("R_{i:06}.png"))).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-9);
    }
}

#[test]
fn photo_mode_and_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let (input, out) = (tmp.path().join("in"), tmp.path().join("out"));
    write_sequence(&input, 4, 16, 16);
    let res = tempofuse(&[
        "--input", s(&input), "--output", s(&out), "--mode", "photo", "--dump-maps", "--color", "00ff80",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("blend.png").is_file());
    let maps = out.join("maps");
    for name in ["000003_contrast.png", "000003_distinctness.png", "000003_weight000000.png", "000003_mask.png"] {
        assert!(maps.join(name).is_file(), "missing {name}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let res = tempofuse(&["--input", "x", "--output", "y", "--alpha-d", "1000"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(tempofuse(&["--output", "y"]).status.code(), Some(2));
    assert_eq!(tempofuse(&["--help"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_1_and_name_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let res = tempofuse(&["--input", s(&tmp.path().join("missing/*.png")), "--output", s(&out)]);
    assert_eq!(res.status.code(), Some(1));

    let input = tmp.path().join("mixed");
    write_sequence(&input, 2, 16, 16);
    let odd = FrameBuffer::uniform(15, 16, [0.5; 3]).unwrap();
    write_frame(&odd, &input.join("frame_zzz.png"), 8).unwrap();
    let res = tempofuse(&["--input", s(&input), "--output", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("frame_zzz.png"), "{stderr}");
}
