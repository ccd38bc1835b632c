//! End-to-end tests of the `svip` binary: every subcommand, the exit-code
//! contract, and the stable error prefixes.

use std::fs;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn svip() -> Command {
    Command::new(env!("CARGO_BIN_EXE_svip"))
}

fn run(args: &[&str]) -> Output {
    svip().args(args).output().expect("spawn svip")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small valid PPM with distinct channel statistics.
fn sample_ppm(path: &Path, w: u32, h: u32) {
    let mut bytes = format!("P6\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(((x * 40 + y) % 256) as u8);
            bytes.push(((x + y * 11) % 256) as u8);
            bytes.push(if (x / 4 + y / 4) % 2 == 0 { 30 } else { 220 });
        }
    }
    fs::write(path, bytes).unwrap();
}

fn sample_pgm(path: &Path, w: u32, h: u32) {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(((x * 37 + y * 5) % 256) as u8);
        }
    }
    fs::write(path, bytes).unwrap();
}

#[test]
fn keystream_vector() {
    let out = run(&["rc4-keystream", "--key-hex", "4B6579", "--count", "9"]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out), "EB9F7781B734CA72A7\n");
}

#[test]
fn keystream_from_key_file() {
    let dir = tempfile::tempdir().unwrap();
    let key_path = dir.path().join("key.bin");
    fs::write(&key_path, b"Key").unwrap();
    let out = run(&[
        "rc4-keystream",
        "--key-file",
        key_path.to_str().unwrap(),
        "--count",
        "5",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out), "EB9F7781B7\n");
}

#[test]
fn binarize_dumps_three_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    let output = dir.path().join("out.pgm");
    sample_ppm(&input, 24, 16);

    let out = run(&[
        "binarize",
        input.to_str().unwrap(),
        output.to_str().unwrap(),
        "--dump-threshold",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));

    let lines: Vec<String> = stdout_str(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 3, "expected one threshold per channel");
    for line in &lines {
        let t: u32 = line.parse().expect("decimal threshold");
        assert!(t <= 255);
    }

    // output is a P5 file holding only 0 and 255
    let written = fs::read(&output).unwrap();
    assert!(written.starts_with(b"P5\n24 16\n255\n"));
    let payload = &written[written.len() - 24 * 16..];
    assert!(payload.iter().all(|&v| v == 0 || v == 255));
}

#[test]
fn binarize_gray_dumps_one_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    sample_pgm(&input, 16, 16);
    let out = run(&[
        "binarize",
        input.to_str().unwrap(),
        output.to_str().unwrap(),
        "--dump-threshold",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout_str(&out).lines().count(), 1);
}

#[test]
fn binarize_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    sample_ppm(&input, 20, 20);
    let out_a = dir.path().join("a.pgm");
    let out_b = dir.path().join("b.pgm");
    let first = run(&["binarize", input.to_str().unwrap(), out_a.to_str().unwrap()]);
    let second = run(&["binarize", input.to_str().unwrap(), out_b.to_str().unwrap()]);
    assert!(first.status.success() && second.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(fs::read(out_a).unwrap(), fs::read(out_b).unwrap());
}

#[test]
fn filter_identity_preserves_pixels() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    sample_pgm(&input, 9, 7);
    let out = run(&[
        "filter",
        input.to_str().unwrap(),
        output.to_str().unwrap(),
        "--kernel",
        "identity",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    assert_eq!(fs::read(&input).unwrap(), fs::read(&output).unwrap());
}

#[test]
fn filter_kernel_file_matches_builtin_box5() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    sample_ppm(&input, 12, 9);
    let kernel_path = dir.path().join("box.kernel");
    fs::write(&kernel_path, format!("{}25\n", "1 ".repeat(25))).unwrap();

    let out_builtin = dir.path().join("builtin.ppm");
    let out_file = dir.path().join("file.ppm");
    let a = run(&[
        "filter",
        input.to_str().unwrap(),
        out_builtin.to_str().unwrap(),
        "--kernel",
        "box5",
    ]);
    let spec = format!("@{}", kernel_path.display());
    let b = run(&[
        "filter",
        input.to_str().unwrap(),
        out_file.to_str().unwrap(),
        "--kernel",
        &spec,
    ]);
    assert!(a.status.success() && b.status.success());
    let builtin_bytes = fs::read(out_builtin).unwrap();
    assert!(builtin_bytes.starts_with(b"P6"), "color input stays color");
    assert_eq!(builtin_bytes, fs::read(out_file).unwrap());
}

#[test]
fn filter_too_small_image_is_a_dimension_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    let output = dir.path().join("out.pgm");
    sample_pgm(&input, 4, 4);
    let out = run(&["filter", input.to_str().unwrap(), output.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_str(&out).starts_with("error: dimension: "),
        "stderr: {}",
        stderr_str(&out)
    );
    assert!(!output.exists(), "no output file may appear on failure");
}

#[test]
fn roundtrip_prints_ok() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    sample_ppm(&input, 31, 13);
    let out = run(&["roundtrip", "--key-hex", "00", input.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    assert_eq!(stdout_str(&out), "OK\n");
}

#[test]
fn send_recv_over_stdio_pipes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    sample_ppm(&input, 40, 25);
    let wire = dir.path().join("wire.bin");
    let received = dir.path().join("recv.ppm");

    let out = svip()
        .args(["send", "--to", "-", "--key-hex", "C0FFEE", input.to_str().unwrap()])
        .stdout(fs::File::create(&wire).unwrap())
        .output()
        .unwrap();
    assert!(out.status.success(), "send stderr: {}", stderr_str(&out));

    // frame = 14-byte header + 3*w*h payload
    assert_eq!(fs::metadata(&wire).unwrap().len(), 14 + 3 * 40 * 25);

    let out = svip()
        .args([
            "recv",
            "--listen",
            "-",
            "--key-hex",
            "C0FFEE",
            "--out",
            received.to_str().unwrap(),
        ])
        .stdin(fs::File::open(&wire).unwrap())
        .output()
        .unwrap();
    assert!(out.status.success(), "recv stderr: {}", stderr_str(&out));
    assert_eq!(fs::read(&input).unwrap(), fs::read(&received).unwrap());
}

#[test]
fn recv_with_wrong_key_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    sample_pgm(&input, 10, 10);
    let wire = dir.path().join("wire.bin");
    let received = dir.path().join("recv.pgm");

    let out = svip()
        .args(["send", "--to", "-", "--key-hex", "AA", input.to_str().unwrap()])
        .stdout(fs::File::create(&wire).unwrap())
        .output()
        .unwrap();
    assert!(out.status.success());

    let out = svip()
        .args([
            "recv",
            "--listen",
            "-",
            "--key-hex",
            "BB",
            "--out",
            received.to_str().unwrap(),
        ])
        .stdin(fs::File::open(&wire).unwrap())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_str(&out).starts_with("error: integrity: "),
        "stderr: {}",
        stderr_str(&out)
    );
    assert!(!received.exists(), "no output file may appear on failure");

    // --no-verify accepts the frame and writes the garbled pixels instead
    let out = svip()
        .args([
            "recv",
            "--listen",
            "-",
            "--key-hex",
            "BB",
            "--out",
            received.to_str().unwrap(),
            "--no-verify",
        ])
        .stdin(fs::File::open(&wire).unwrap())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    assert!(received.exists());
    assert_ne!(fs::read(&input).unwrap(), fs::read(&received).unwrap());
}

#[test]
fn send_recv_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.ppm");
    sample_ppm(&input, 17, 23);
    let received = dir.path().join("recv.ppm");

    // reserve a port, free it, and hand it to recv --listen
    let addr = {
        let probe = TcpListener::bind("127.0.0.1:0").unwrap();
        probe.local_addr().unwrap()
    };
    let addr = addr.to_string();

    let receiver = svip()
        .args([
            "recv",
            "--listen",
            &addr,
            "--key-hex",
            "DEADBEEF",
            "--out",
            received.to_str().unwrap(),
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();

    // the listener needs a moment to come up; retry the connection
    let mut sent = None;
    for _ in 0..50 {
        let out = run(&["send", "--to", &addr, "--key-hex", "DEADBEEF", input.to_str().unwrap()]);
        if out.status.success() {
            sent = Some(out);
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(100));
    }
    let sent = sent.expect("sender never connected");
    assert!(sent.status.success());

    let recv_out = receiver.wait_with_output().unwrap();
    assert!(
        recv_out.status.success(),
        "recv stderr: {}",
        String::from_utf8_lossy(&recv_out.stderr)
    );
    assert_eq!(fs::read(&input).unwrap(), fs::read(&received).unwrap());
}

#[test]
fn image_streams_through_dashes() {
    // binarize reading stdin and writing stdout
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pgm");
    sample_pgm(&input, 12, 12);

    let mut child = svip()
        .args(["binarize", "-", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&fs::read(&input).unwrap())
        .unwrap();
    let mut produced = Vec::new();
    child
        .stdout
        .take()
        .unwrap()
        .read_to_end(&mut produced)
        .unwrap();
    assert!(child.wait().unwrap().success());
    assert!(produced.starts_with(b"P5\n12 12\n255\n"));
}

#[test]
fn usage_errors_exit_1() {
    let out = run(&["binarize", "--bogus-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("Usage"));

    // the key group is required
    let out = run(&["rc4-keystream", "--count", "4"]);
    assert_eq!(out.status.code(), Some(1));

    // both key sources at once is also a usage error
    let out = run(&["rc4-keystream", "--key-hex", "00", "--key-file", "x", "--count", "4"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn processing_errors_exit_2_with_category() {
    let out = run(&["binarize", "/no/such/input.ppm", "/tmp/unused-out.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_str(&out).starts_with("error: io: "),
        "stderr: {}",
        stderr_str(&out)
    );

    let out = run(&["rc4-keystream", "--key-hex", "zz", "--count", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).starts_with("error: key: "));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pgm");
    fs::write(&bad, b"P5 4 4 65535 junk").unwrap();
    let out = run(&["binarize", bad.to_str().unwrap(), "/tmp/unused-out.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_str(&out).starts_with("error: unsupported: "),
        "stderr: {}",
        stderr_str(&out)
    );

    let truncated = dir.path().join("short.pgm");
    fs::write(&truncated, b"P5 4 4 255 \x01\x02").unwrap();
    let out = run(&["binarize", truncated.to_str().unwrap(), "/tmp/unused-out.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).starts_with("error: truncated: "));

    let good = dir.path().join("good.pgm");
    sample_pgm(&good, 8, 8);
    let out = run(&["binarize", good.to_str().unwrap(), "/tmp/unused-out.pgm", "--stride", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_str(&out).starts_with("error: threshold: "));
}

#[test]
fn garbage_stream_to_recv_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.bin");
    fs::write(&garbage, b"XXXXnot a frame at all............").unwrap();
    let out_path: PathBuf = dir.path().join("out.pgm");

    let out = svip()
        .args([
            "recv",
            "--listen",
            "-",
            "--key-hex",
            "00",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .stdin(fs::File::open(&garbage).unwrap())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr_str(&out).starts_with("error: protocol: "),
        "stderr: {}",
        stderr_str(&out)
    );
}
