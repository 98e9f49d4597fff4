use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use padpress_cli::write_captures;
use padpress_core::export::{parse_frame_csv, FrameRecord};
use padpress_core::synth::{self, ProtocolParams};
use padpress_core::{format, Lattice, Point};
use tempfile::TempDir;

fn padpress(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padpress")).args(args).output().expect("run padpress")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Captures for the default protocol and the lattice built from them.
fn built(dir: &TempDir) -> (Vec<PathBuf>, PathBuf) {
    let sessions = synth::protocol_sessions(&ProtocolParams::default());
    let inputs = write_captures(dir.path(), &sessions).unwrap();
    let out = dir.path().join("lattice.json");
    let mut args = vec!["build".to_string()];
    for p in &inputs {
        args.extend(["--input".into(), s(p).into()]);
    }
    args.extend(["--out".into(), s(&out).into()]);
    let o = padpress(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    (inputs, out)
}

#[test]
fn build_reports_protocol_grid() {
    let dir = TempDir::new().unwrap();
    let (inputs, out) = built(&dir);
    let o = padpress(&[
        "build",
        "--input",
        s(&inputs[0]),
        "--input",
        s(&inputs[1]),
        "--input",
        s(&inputs[2]),
        "--out",
        s(&out),
    ]);
    let text = stdout(&o);
    assert!(text.contains("nodes: 12"), "{text}");
    assert!(text.contains("axis z [mm]: 0, 0.5, 1, 1.5"), "{text}");
    assert!(text.contains("axis theta [deg]: 15, 30, 45"), "{text}");
    let lattice: Lattice = format::load_lattice(&out).unwrap();
    assert_eq!(lattice.shape(), &[4, 3]);
}

#[test]
fn build_failures_exit_nonzero() {
    let dir = TempDir::new().unwrap();
    let sessions = synth::protocol_sessions(&ProtocolParams::default());
    let inputs = write_captures(dir.path(), &sessions).unwrap();
    let out = dir.path().join("l.json");

    let o = padpress(&["build", "--input", s(&inputs[0]), "--out", s(&out), "--threshold-kpa", "1000"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("NeverExceeded"), "{}", stderr(&o));

    let o = padpress(&["build", "--input", s(&inputs[0]), "--input", s(&inputs[0]), "--out", s(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("DuplicateNode"), "{}", stderr(&o));

    let o = padpress(&["build", "--input", s(&inputs[0]), "--out", s(&out), "--threshold-kpa", "-1"]);
    assert!(!o.status.success());
    assert!(!out.exists());
}

#[test]
fn query_formats() {
    let dir = TempDir::new().unwrap();
    let (_, path) = built(&dir);
    let lattice: Lattice = format::load_lattice(&path).unwrap();

    // Showcase condition: shape and range only.
    let o = padpress(&["query", "--lattice", s(&path), "--at", "z=1.25,theta=30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let frame = parse_frame_csv(&stdout(&o)).unwrap();
    assert_eq!((frame.rows(), frame.cols()), (16, 15));
    assert!(frame.values().iter().all(|v| (0.0..=lattice.full_scale_kpa()).contains(v)));
    let (expected, _) = lattice.query(&Point::new(vec![1.25, 30.0])).unwrap();
    for (a, b) in frame.values().iter().zip(expected.values()) {
        assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
    }

    // At a node the printed values are the stored ones.
    let o = padpress(&["query", "--lattice", s(&path), "--at", "theta=45, z=0.5"]);
    let frame = parse_frame_csv(&stdout(&o)).unwrap();
    let stored = lattice.node_values(&[1, 2]).unwrap();
    for (a, b) in frame.values().iter().zip(stored) {
        assert_eq!(*a, format!("{:.8e}", b).parse::<f64>().unwrap());
    }

    let o = padpress(&["query", "--lattice", s(&path), "--at", "z=99,theta=99", "--format", "json"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("clamped"), "{}", stderr(&o));
    let record: FrameRecord = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(record.values, lattice.node_values(&[3, 2]).unwrap());
    assert_eq!(record.query["z"], 1.5);
    assert!(record.clamped["z"] && record.clamped["theta"]);

    let pgm = dir.path().join("f.pgm");
    let o = padpress(&["query", "--lattice", s(&path), "--at", "z=1.5,theta=30", "--format", "pgm", "--out", s(&pgm)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let bytes = std::fs::read(&pgm).unwrap();
    assert!(bytes.starts_with(b"P5\n15 16\n255\n"));
    assert_eq!(bytes.len(), b"P5\n15 16\n255\n".len() + 240);

    for bad in ["z=1", "z=1,theta=30,phi=0", "z=x,theta=30", "z=1,z=2,theta=3", "z=inf,theta=30"] {
        let o = padpress(&["query", "--lattice", s(&path), "--at", bad]);
        assert!(!o.status.success(), "{bad}");
    }
}

#[test]
fn bench_reports_and_is_seeded() {
    let dir = TempDir::new().unwrap();
    let (_, path) = built(&dir);
    let o = padpress(&["bench", "--lattice", s(&path), "--queries", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no queries run"));

    let o = padpress(&["bench", "--lattice", s(&path), "--queries", "2000", "--seed", "3"]);
    let text = stdout(&o);
    for key in ["min_us:", "mean_us:", "p50_us:", "p99_us:", "max_us:", "target: mean < 10 us", "cpu:"] {
        assert!(text.contains(key), "{key} missing from {text}");
    }

    let lattice: Lattice = format::load_lattice(&path).unwrap();
    assert_eq!(padpress_cli::bench_points(&lattice, 50, 9), padpress_cli::bench_points(&lattice, 50, 9));
    assert_ne!(padpress_cli::bench_points(&lattice, 50, 9), padpress_cli::bench_points(&lattice, 50, 10));
}

#[test]
fn latency_percentiles() {
    let s = padpress_cli::latency_stats((1..=100).map(f64::from).collect()).unwrap();
    assert_eq!((s.min_us, s.p50_us, s.p99_us, s.max_us), (1.0, 50.0, 99.0, 100.0));
    assert_eq!(s.mean_us, 50.5);
    assert!(padpress_cli::latency_stats(vec![]).is_none());
}

#[test]
fn serve_rejects_occupied_port() {
    let dir = TempDir::new().unwrap();
    let (_, path) = built(&dir);
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = holder.local_addr().unwrap().to_string();
    let o = padpress(&["serve", "--lattice", s(&path), "--addr", &addr]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("BindFailure"), "{}", stderr(&o));

    let o = padpress(&["serve", "--lattice", s(&path), "--addr", "127.0.0.1:0", "--rate-hz", "0"]);
    assert!(!o.status.success());
}

fn spawn_listening(args: &[&str]) -> (std::process::Child, String) {
    use std::io::{BufRead, BufReader};
    let mut child = Command::new(env!("CARGO_BIN_EXE_padpress"))
        .args(args)
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
    let url = line.trim().strip_prefix("listening on ").expect("listening line").to_string();
    (child, url)
}

#[test]
fn serve_handshake_lists_axes() {
    use futures_util::StreamExt;
    let dir = TempDir::new().unwrap();
    let (_, path) = built(&dir);
    let (mut child, url) = spawn_listening(&["serve", "--lattice", s(&path), "--addr", "127.0.0.1:0"]);
    let rt = tokio::runtime::Runtime::new().unwrap();
    let hello: serde_json::Value = rt.block_on(async {
        let (mut ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
        let msg = ws.next().await.unwrap().unwrap();
        serde_json::from_str(msg.to_text().unwrap()).unwrap()
    });
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["axes"][0]["name"], "z");
    assert_eq!(hello["axes"][0]["min"], 0.0);
    assert_eq!(hello["axes"][0]["max"], 1.5);
    assert_eq!(hello["axes"][1]["name"], "theta");
    assert_eq!(hello["axes"][1]["min"], 15.0);
    assert_eq!(hello["axes"][1]["max"], 45.0);

    // SIGINT is the clean shutdown path.
    #[cfg(unix)]
    {
        let status = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
        assert!(status.success());
        assert!(child.wait().unwrap().success());
    }
    #[cfg(not(unix))]
    child.kill().unwrap();
}

#[test]
fn replay_node_constant_trajectory() {
    use futures_util::StreamExt;
    let dir = TempDir::new().unwrap();
    let (_, path) = built(&dir);
    let lattice: Lattice = format::load_lattice(&path).unwrap();
    let trajectory = dir.path().join("t.csv");
    std::fs::write(&trajectory, "t_s,z,theta\n0,1.0,30\n0.05,1.0,30\n0.1,1.0,30\n").unwrap();
    let (mut child, url) = spawn_listening(&[
        "replay",
        "--lattice",
        s(&path),
        "--addr",
        "127.0.0.1:0",
        "--trajectory",
        s(&trajectory),
        "--wait-viewers",
        "1",
        "--rate-hz",
        "100",
    ]);
    let rt = tokio::runtime::Runtime::new().unwrap();
    let frames: Vec<Vec<f64>> = rt.block_on(async {
        let (ws, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
        let mut frames = Vec::new();
        let mut ws = ws;
        while let Some(Ok(msg)) = ws.next().await {
            if let Ok(text) = msg.to_text() {
                let v: serde_json::Value = match serde_json::from_str(text) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                if v["type"] == "frame" {
                    frames.push(serde_json::from_value(v["values"].clone()).unwrap());
                }
            }
        }
        frames
    });
    assert!(child.wait().unwrap().success());
    assert!(!frames.is_empty());
    let node = lattice.node_values(&[2, 1]).unwrap();
    assert!(frames.iter().all(|f| f == node));

    std::fs::write(&trajectory, "").unwrap();
    let o = padpress(&["replay", "--lattice", s(&path), "--addr", "127.0.0.1:0", "--trajectory", s(&trajectory)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("MalformedTrajectory"), "{}", stderr(&o));
}
