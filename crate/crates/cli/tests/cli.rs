use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn lf(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lf"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("LF_PROVIDER_API_KEY")
        .output()
        .expect("lf runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// `n` single-turn records with varied response lengths.
fn write_dataset(path: &Path, n: usize, poison: Option<usize>) {
    let records: Vec<Value> = (0..n)
        .map(|i| {
            let mut answer = format!("Picture {i} shows a dog running on the beach.");
            for j in 0..i % 5 {
                answer.push_str(&format!(" Sentence {j} adds a considerably longer description of the scenery."));
            }
            if poison == Some(i) {
                answer = "POISON record that the provider always rejects.".into();
            }
            json!({
                "id": format!("{i:04}"),
                "image": format!("img/{i:04}.jpg"),
                "conversations": [
                    {"from": "human", "value": "<image>\nWhat is in the picture?"},
                    {"from": "gpt", "value": answer},
                ],
            })
        })
        .collect();
    fs::write(path, serde_json::to_vec_pretty(&records).unwrap()).unwrap();
}

fn write_config(dir: &Path, run_id: &str, extra: &str) -> PathBuf {
    let path = dir.join(format!("{run_id}.toml"));
    fs::write(
        &path,
        format!("run_id = \"{run_id}\"\ninput = \"data.json\"\noutput_dir = \"runs\"\nparallelism = 3\ncheckpoint_every = 4\n{extra}"),
    )
    .unwrap();
    path
}

fn outputs(run_dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(run_dir.join("out"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn ingest_reports_counts_and_rejects_malformed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.json"), "[]").unwrap();
    let out = lf(dir.path(), &["ingest", "empty.json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["samples"], 0);

    fs::write(dir.path().join("bad.json"), "[\n  {\"id\": \"1\",\n").unwrap();
    let out = lf(dir.path(), &["ingest", "bad.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));

    let out = lf(dir.path(), &["ingest", data_dir().join("pretrain_sample.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["samples"], 12);
}

#[test]
fn sample_defaults_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("data.json"), 40, None);
    let first = lf(dir.path(), &["sample", "--input", "data.json", "--seed", "5"]);
    assert_eq!(code(&first), 0);
    let manifest = stdout_json(&first);
    assert_eq!(manifest["k"], 30);
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["selected"].as_array().unwrap().len(), 30);
    let second = lf(dir.path(), &["sample", "--input", "data.json", "--seed", "5"]);
    assert_eq!(first.stdout, second.stdout);

    let none = lf(dir.path(), &["sample", "--input", "data.json", "--k", "0", "--out", "sel.json"]);
    assert_eq!(code(&none), 0);
    let written: Value = serde_json::from_slice(&fs::read(dir.path().join("sel.json")).unwrap()).unwrap();
    assert!(written["selected"].as_array().unwrap().is_empty());
}

#[test]
fn eval_preambles_picks_rigged_winner_and_exports_radar() {
    let dir = tempfile::tempdir().unwrap();
    let (preambles, pairs) = (data_dir().join("preambles"), data_dir().join("eval_set.json"));
    let args = [
        "eval-preambles",
        "--preambles-dir",
        preambles.to_str().unwrap(),
        "--pairs",
        pairs.to_str().unwrap(),
        "--provider",
        "rigged:6",
        "--report",
        "report.json",
        "--export",
        "radar.csv",
    ];
    let out = lf(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = stdout_json(&out);
    assert_eq!(summary["winner"], 6);
    assert_eq!(summary["grand_means"]["6"], 1.0);

    let csv = fs::read_to_string(dir.path().join("radar.csv")).unwrap();
    assert_eq!(csv.lines().count(), 25);
    assert_eq!(csv.lines().next(), Some("preamble_id,n,mean_bleu"));

    let again = lf(dir.path(), &["export-radar", "--report", "report.json"]);
    assert_eq!(code(&again), 0);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), csv);
}

#[test]
fn eval_preambles_names_missing_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut set: Value = serde_json::from_slice(&fs::read(data_dir().join("eval_set.json")).unwrap()).unwrap();
    let first = set["prompts"][0]["id"].as_str().unwrap().to_string();
    set["references"][&first].as_object_mut().unwrap().remove("ja");
    fs::write(dir.path().join("pairs.json"), set.to_string()).unwrap();
    let out = lf(
        dir.path(),
        &["eval-preambles", "--preambles-dir", data_dir().join("preambles").to_str().unwrap(), "--pairs", "pairs.json"],
    );
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains(&first) && err.contains("ja"), "{err}");
}

#[test]
fn translate_end_to_end_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("data.json"), 10, None);
    let config = write_config(dir.path(), "e2e", "");
    let out = lf(dir.path(), &["translate", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = stdout_json(&out);
    assert_eq!(manifest["planned_jobs"], 70);
    assert_eq!(manifest["balanced"], true);

    let run_dir = dir.path().join("runs/e2e");
    let files = outputs(&run_dir);
    assert_eq!(files.len(), 8);
    assert_eq!(files.iter().filter(|(n, _)| !n.ends_with(".en.json")).count(), 7);
    assert!(run_dir.join("config.toml").exists());

    let verified = lf(dir.path(), &["verify", "--run-id", "e2e"]);
    assert_eq!(code(&verified), 0);
    let report = stdout_json(&verified);
    for (lang, count) in manifest["counts"].as_object().unwrap() {
        assert_eq!(&report["balance"]["counts"][lang], count);
        assert_eq!(count, 10);
    }

    // a second translate into the same run is refused
    assert_eq!(code(&lf(dir.path(), &["translate", "--config", config.to_str().unwrap()])), 2);

    let target = run_dir.join("out/data.fr.json");
    let mut bytes = fs::read(&target).unwrap();
    let at = bytes.iter().position(|&b| b == b'P').unwrap();
    bytes[at] = b'Q';
    fs::write(&target, bytes).unwrap();
    assert_eq!(code(&lf(dir.path(), &["verify", "--run-id", "e2e"])), 1);
}

#[test]
fn interrupted_run_resumes_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("data.json"), 10, None);
    let twin = write_config(dir.path(), "twin", "");
    assert_eq!(code(&lf(dir.path(), &["translate", "--config", twin.to_str().unwrap()])), 0);

    let config = write_config(dir.path(), "cut", "");
    let out = lf(dir.path(), &["translate", "--config", config.to_str().unwrap(), "--abort-after", "25"]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["aborted"], true);

    // resume from another directory using the stored config
    let elsewhere = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let out = lf(
        elsewhere.path(),
        &["resume", "--run-id", "cut", "--output-dir", runs.to_str().unwrap(), "--parallelism", "5"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout_json(&out)["resumed_jobs"].as_u64().unwrap() >= 25 - 4);
    assert_eq!(outputs(&runs.join("cut")), outputs(&runs.join("twin")));

    // resuming a finished run changes nothing
    let manifest = fs::read(runs.join("cut/manifest.json")).unwrap();
    let out = lf(elsewhere.path(), &["resume", "--run-id", "cut", "--output-dir", runs.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(runs.join("cut/manifest.json")).unwrap(), manifest);

    assert_eq!(code(&lf(dir.path(), &["resume", "--run-id", "missing"])), 2);
}

/// Minimal keep-alive chat-completions server: replies with the prompt's
/// input text, or HTTP 500 when the text contains "POISON".
fn echo_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let stream = stream.unwrap();
            std::thread::spawn(move || serve_connection(stream));
        }
    });
    url
}

fn serve_connection(stream: TcpStream) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut writer = stream;
    loop {
        let mut length = 0usize;
        let mut first = true;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            if line == "\r\n" && !first {
                break;
            }
            first = false;
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        let request: Value = serde_json::from_slice(&body).unwrap();
        let prompt = request["messages"][0]["content"].as_str().unwrap();
        let input = prompt.rsplit_once("Input:\n").unwrap().1.split("\nExpected Output:").next().unwrap();
        let (status, reply) = if input.contains("POISON") {
            ("500 Internal Server Error", String::new())
        } else {
            ("200 OK", json!({"choices": [{"message": {"content": input}}]}).to_string())
        };
        let response = format!(
            "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{reply}",
            reply.len()
        );
        if writer.write_all(response.as_bytes()).is_err() {
            return;
        }
    }
}

#[test]
fn permanent_failure_exits_one_and_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&dir.path().join("data.json"), 10, Some(3));
    let url = echo_server();
    let config = write_config(
        dir.path(),
        "faulty",
        &format!(
            "languages = [\"fr\"]\n\n[provider]\nkind = \"http\"\nbase_url = \"{url}\"\nrequests_per_second = 1000\nburst = 100\ntimeout_secs = 5\n\n[retry]\nmax_attempts = 2\nbase_delay_ms = 1\nmax_delay_ms = 2\n"
        ),
    );
    let out = lf(dir.path(), &["translate", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let manifest = stdout_json(&out);
    assert_eq!(manifest["done"], 9);
    assert_eq!(manifest["failed"], 1);
    assert_eq!(manifest["failures"][0]["sample_id"], "0003");
    assert_eq!(manifest["counts"]["fr"], 9);
    assert_eq!(manifest["counts"]["en"], 10);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&lf(dir.path(), &["frobnicate"])), 2);
    assert_eq!(code(&lf(dir.path(), &["translate", "--config", "absent.toml"])), 2);
    fs::write(dir.path().join("bad.toml"), "run_id = \"x\"\ninput = \"d.json\"\nparallelism = 0\n").unwrap();
    assert_eq!(code(&lf(dir.path(), &["translate", "--config", "bad.toml"])), 2);
    assert_eq!(code(&lf(dir.path(), &["verify", "--run-id", "none"])), 2);
    assert_eq!(
        code(&lf(dir.path(), &["eval-preambles", "--preambles-dir", ".", "--pairs", "x.json", "--provider", "bogus"])),
        2
    );
}
