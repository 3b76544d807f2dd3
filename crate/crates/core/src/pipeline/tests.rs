use std::time::Duration;

use super::*;
use crate::corpus::{Speaker, Turn};
use crate::translation::mock::{FaultInjector, Instrumented, TaggingProvider};
use crate::translation::RetryPolicy;

fn samples(n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| Sample {
            id: format!("{i:06}"),
            image: format!("{i:05}/{i:06}.jpg"),
            turns: vec![
                Turn::new(Speaker::Human, "Describe the image concisely."),
                Turn::new(Speaker::Assistant, format!("a photo of item number {i} on a wooden table")),
            ],
            language: LanguageCode::english(),
            extra: Default::default(),
        })
        .collect()
}

fn spec(parallelism: usize) -> RunSpec {
    let mut s = RunSpec::new("t", LanguageCode::default_targets());
    s.parallelism = parallelism;
    s.checkpoint_every = 7;
    s.verification.retry = RetryPolicy::immediate(3);
    s
}

#[test]
fn plan_counts_and_order() {
    let targets = LanguageCode::default_targets();
    let jobs = plan_jobs(&samples(10), &targets, 6).unwrap();
    assert_eq!(jobs.len(), 70);
    assert_eq!(jobs[0].payload.sample_id, "000000");
    assert_eq!(jobs[6].target, targets[6]);
    assert_eq!(jobs[7].payload.sample_id, "000001");
    assert!(plan_jobs(&samples(10), &[], 6).unwrap().is_empty());
    assert!(matches!(plan_jobs(&samples(1), &[LanguageCode::english()], 6), Err(PipelineError::InvalidPlan(_))));
}

#[test]
fn seventy_jobs_balanced() {
    let dir = tempfile::tempdir().unwrap();
    let provider = Instrumented::new(TaggingProvider, Duration::from_millis(1));
    let m = run(&spec(8), &samples(10), &provider, None, dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(m.planned_jobs, 70);
    assert_eq!(m.done, 70);
    assert!(m.balanced && m.conserved());
    assert_eq!(m.counts.len(), 8);
    assert!(m.counts.values().all(|&c| c == 10));
    assert!(provider.max_in_flight() <= 8);
    assert!(verify_run(dir.path()).unwrap().ok);
    let debug = fs::read_to_string(dir.path().join(DEBUG_LOG)).unwrap();
    assert_eq!(debug.lines().count(), 140);
}

#[test]
fn transient_faults_retried() {
    let dir = tempfile::tempdir().unwrap();
    let data = samples(20);
    let text = data[13].turns[1].text.clone();
    let provider = FaultInjector::new(TaggingProvider).transient(&text, 2);
    let mut s = spec(4);
    s.targets = vec![LanguageCode::new("fr").unwrap()];
    let m = run(&s, &data, &provider, None, dir.path(), &RunOptions::default()).unwrap();
    assert!(m.balanced && m.failures.is_empty() && m.conserved());
    assert_eq!(m.provider.failed_attempts, 2);
    let records = fs::read_to_string(dir.path().join(DEBUG_LOG)).unwrap();
    let job13 = plan_jobs(&data[13..14], &s.targets, 6).unwrap().remove(0).job_id;
    let forward: Vec<_> = records
        .lines()
        .map(|l| serde_json::from_str::<DebugRecord>(l).unwrap())
        .filter(|r| r.job_id == job13 && r.attempt.target == "fr")
        .collect();
    assert_eq!(forward.len(), 3);
    assert_eq!(forward[2].attempt.attempt, 3);
}

#[test]
fn permanent_failure_unbalances() {
    let dir = tempfile::tempdir().unwrap();
    let data = samples(10);
    let provider = FaultInjector::new(TaggingProvider).permanent(&data[4].turns[1].text);
    let mut s = spec(2);
    s.targets = vec![LanguageCode::new("fr").unwrap(), LanguageCode::new("es").unwrap()];
    let m = run(&s, &data, &provider, None, dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(m.failures.len(), 2);
    assert_eq!(m.failed, 2);
    assert!(m.conserved());
    assert!(!m.balanced);
    let report = verify_distribution(&m);
    assert!(!report.pass);
    assert_eq!(report.shortfalls.len(), 2);
    assert!(report.shortfalls.iter().all(|s| s.deficit == 1));
}

#[test]
fn blocklisted_sample_dropped_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let filter = BlocklistFilter::new(["number 3"]);
    let m = run(&spec(4), &samples(10), &TaggingProvider, Some(&filter), dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(m.dropped_samples, vec!["000003".to_string()]);
    assert_eq!(m.source_samples, 9);
    assert!(m.balanced);
    assert!(m.counts.values().all(|&c| c == 9));
}

struct ThreeInHundred;
impl ContentFilter for ThreeInHundred {
    fn name(&self) -> &str {
        "fixture"
    }
    fn classify(&self, sample: &Sample) -> FilterDecision {
        if sample.id.parse::<usize>().unwrap() % 33 == 7 {
            FilterDecision::Flag
        } else {
            FilterDecision::Keep
        }
    }
}

#[test]
fn flagged_content_goes_to_review_until_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = spec(8);
    s.targets = vec![LanguageCode::new("fr").unwrap()];
    let data = samples(100);
    let m = run(&s, &data, &TaggingProvider, Some(&ThreeInHundred), dir.path(), &RunOptions::default()).unwrap();
    let queued: Vec<_> = m.review_queue.iter().map(|i| i.key().to_string()).collect();
    assert_eq!(queued, ["sample:000007", "sample:000040", "sample:000073"]);
    assert_eq!(m.counts[&LanguageCode::english()], 97);
    assert!(!m.balanced);

    let reviewed: String = queued.iter().map(|k| format!("{{\"key\": \"{k}\"}}\n")).collect();
    fs::write(dir.path().join(REVIEWED_FILE), reviewed).unwrap();
    let m = resume(&s, &data, &TaggingProvider, Some(&ThreeInHundred), dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(m.executed_jobs, 0);
    assert!(m.balanced && m.review_queue.is_empty());
}

#[test]
fn resume_checks_config() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(2);
    let err = run(
        &s,
        &samples(10),
        &TaggingProvider,
        None,
        dir.path(),
        &RunOptions { abort_after: Some(0), ..Default::default() },
    );
    // abort_after 0 never triggers; the run completes
    assert!(err.is_ok());
    let mut changed = s.clone();
    changed.targets.pop();
    assert!(matches!(
        resume(&changed, &samples(10), &TaggingProvider, None, dir.path(), &RunOptions::default()),
        Err(PipelineError::ConfigMismatch { .. })
    ));
    let before = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
    let mut cadence = s.clone();
    cadence.parallelism = 5;
    cadence.checkpoint_every = 1;
    let m = resume(&cadence, &samples(10), &TaggingProvider, None, dir.path(), &RunOptions::default()).unwrap();
    // nothing left to do, so the finished run is left as it was
    assert_eq!(m.executed_jobs, 70);
    assert_eq!(std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap(), before);
    assert!(matches!(
        run(&s, &samples(10), &TaggingProvider, None, dir.path(), &RunOptions::default()),
        Err(PipelineError::RunExists(_))
    ));
}

#[test]
fn abort_then_resume_matches() {
    let data = samples(30);
    let s = spec(4);
    let twin = tempfile::tempdir().unwrap();
    let full = run(&s, &data, &TaggingProvider, None, twin.path(), &RunOptions::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let err =
        run(&s, &data, &TaggingProvider, None, dir.path(), &RunOptions { abort_after: Some(50), ..Default::default() });
    assert!(matches!(err, Err(PipelineError::Aborted { completed: 50 })));
    let m = resume(&s, &data, &TaggingProvider, None, dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(m.resumed_jobs + m.executed_jobs, 210);
    assert!(m.resumed_jobs >= 50 - s.checkpoint_every);
    assert_eq!(m.outputs, full.outputs);
}

#[test]
fn duplicate_texts_share_a_job() {
    let mut data = samples(3);
    data[2].turns[1].text = data[0].turns[1].text.clone();
    let dir = tempfile::tempdir().unwrap();
    let m = run(&spec(2), &data, &TaggingProvider, None, dir.path(), &RunOptions::default()).unwrap();
    assert_eq!(m.planned_jobs, 21);
    assert_eq!(m.unique_jobs, 14);
    assert!(m.balanced);
}

#[test]
fn resume_without_checkpoint_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        resume(&spec(1), &samples(1), &TaggingProvider, None, dir.path(), &RunOptions::default()),
        Err(PipelineError::NoCheckpoint(_))
    ));
}
