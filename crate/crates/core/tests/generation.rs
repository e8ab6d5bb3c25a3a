use std::time::Duration;

use recbias::corpus::{load_corpus, parse_llm_response, Gender, GroupSpec, Race};
use recbias::llmgen::{run_generation, GenerationJob, LlmGenError, MockEndpoint, ResponseCache};

fn job(n: u32) -> GenerationJob {
    GenerationJob {
        responses_per_group: n,
        model_id: "mock-model".into(),
        retry_backoff: Duration::ZERO,
        max_retries: 2,
        ..Default::default()
    }
}

#[test]
fn full_matrix_yields_225_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mock = MockEndpoint::new(7);
    let out = run_generation(&job(15), &mock, &path, None).unwrap();
    assert!(out.is_complete());
    assert_eq!(out.corpus.len(), 225);
    assert_eq!(out.new_records, 225);
    assert_eq!(out.requests_issued, 225);
    assert_eq!(mock.calls(), 225);

    let loaded = load_corpus(&path).unwrap();
    assert_eq!(loaded, out.corpus);
    for record in loaded.records() {
        let pairs = parse_llm_response(&record.raw_response).unwrap();
        let stored: Vec<_> = record
            .products
            .iter()
            .map(|p| (p.name.clone(), p.reason.clone()))
            .collect();
        assert_eq!(pairs, stored);
        assert_eq!(record.model_id, "mock-model");
        assert_eq!(record.temperature, 1.0);
    }
    assert_eq!(loaded.groups().len(), 15);
}

#[test]
fn resume_after_100_issues_125_requests() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    run_generation(&job(15), &MockEndpoint::new(1), &path, None).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let first_100: String = text.lines().take(100).map(|l| format!("{l}\n")).collect();
    std::fs::write(&path, first_100).unwrap();

    let mock = MockEndpoint::new(1);
    let out = run_generation(&job(15), &mock, &path, None).unwrap();
    assert_eq!(out.requests_issued, 125);
    assert_eq!(mock.calls(), 125);
    assert_eq!(out.new_records, 125);
    assert_eq!(out.corpus.len(), 225);

    let again = MockEndpoint::new(1);
    let out = run_generation(&job(15), &again, &path, None).unwrap();
    assert_eq!(out.requests_issued, 0);
    assert_eq!(again.calls(), 0);
    assert_eq!(out.corpus.len(), 225);
}

#[test]
fn malformed_three_times_exhausts_two_retries() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let bad = GroupSpec::new(Race::Latino, Gender::Woman);
    let mock = MockEndpoint::new(3).with_malformed(bad, 4, 3);
    let out = run_generation(&job(15), &mock, &path, None).unwrap();
    assert_eq!(out.corpus.len(), 224);
    assert_eq!(out.requests_issued, 224 + 3);
    assert_eq!(out.failures.len(), 1);
    match &out.failures[0] {
        LlmGenError::RetriesExhausted(f) => {
            assert_eq!((f.group, f.response_index, f.attempts), (bad, 4, 3));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(!out.corpus.contains(bad, 4));
    let attempts: Vec<u32> = mock
        .call_log()
        .into_iter()
        .filter(|(g, i, _)| *g == bad && *i == 4)
        .map(|(_, _, a)| a)
        .collect();
    assert_eq!(attempts, vec![0, 1, 2]);
}

#[test]
fn malformed_twice_recovers_within_budget() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let g = GroupSpec::new(Race::Black, Gender::Nonbinary);
    let mock = MockEndpoint::new(3).with_malformed(g, 0, 2);
    let mut j = job(2);
    j.groups = vec![g];
    let out = run_generation(&j, &mock, &path, None).unwrap();
    assert!(out.is_complete());
    assert_eq!(out.corpus.len(), 2);
    assert_eq!(out.requests_issued, 4);
}

#[test]
fn in_flight_limit_is_respected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mock = MockEndpoint::new(0).with_latency(Duration::from_millis(5));
    let mut j = job(4);
    j.endpoint.requests_in_flight_limit = 3;
    let out = run_generation(&j, &mock, &path, None).unwrap();
    assert_eq!(out.corpus.len(), 60);
    assert!(mock.max_in_flight() <= 3, "{}", mock.max_in_flight());
    assert!(mock.max_in_flight() >= 2, "workers never overlapped");

    let path1 = dir.path().join("serial.jsonl");
    let serial = MockEndpoint::new(0).with_latency(Duration::from_millis(1));
    j.endpoint.requests_in_flight_limit = 1;
    run_generation(&j, &serial, &path1, None).unwrap();
    assert_eq!(serial.max_in_flight(), 1);
}

#[test]
fn unreachable_endpoint_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mock = MockEndpoint::new(0).unreachable();
    let err = run_generation(&job(3), &mock, &path, None).unwrap_err();
    assert!(
        matches!(err, LlmGenError::EndpointUnreachable(_)),
        "{err:?}"
    );
}

#[test]
fn invalid_job_issues_no_requests() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mock = MockEndpoint::new(0);
    let err = run_generation(&job(0), &mock, &path, None).unwrap_err();
    assert!(matches!(err, LlmGenError::InvalidJob(_)));
    assert_eq!(mock.calls(), 0);
}

#[test]
fn cache_replays_without_requests() {
    let dir = tempfile::tempdir().unwrap();
    let cache_path = dir.path().join("cache.jsonl");
    let mut j = job(3);
    j.groups = vec![
        GroupSpec::new(Race::White, Gender::Man),
        GroupSpec::new(Race::Asian, Gender::Woman),
    ];

    let mut cache = ResponseCache::open(&cache_path).unwrap();
    let first = run_generation(
        &j,
        &MockEndpoint::new(9),
        &dir.path().join("a.jsonl"),
        Some(&mut cache),
    )
    .unwrap();
    assert_eq!(first.requests_issued, 6);
    assert_eq!(cache.len(), 6);

    let mut cache = ResponseCache::open(&cache_path).unwrap();
    let mock = MockEndpoint::new(9);
    let second = run_generation(&j, &mock, &dir.path().join("b.jsonl"), Some(&mut cache)).unwrap();
    assert_eq!(mock.calls(), 0);
    assert_eq!(second.cache_hits, 6);
    let raw = |c: &recbias::corpus::Corpus| -> Vec<String> {
        c.records().iter().map(|r| r.raw_response.clone()).collect()
    };
    assert_eq!(raw(&first.corpus), raw(&second.corpus));
}

#[test]
fn mock_corpus_is_reproducible_apart_from_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_generation(
        &job(5),
        &MockEndpoint::new(2),
        &dir.path().join("a.jsonl"),
        None,
    )
    .unwrap();
    let b = run_generation(
        &job(5),
        &MockEndpoint::new(2),
        &dir.path().join("b.jsonl"),
        None,
    )
    .unwrap();
    let strip = |c: &recbias::corpus::Corpus| -> Vec<(GroupSpec, u32, String)> {
        c.records()
            .iter()
            .map(|r| (r.group, r.response_index, r.raw_response.clone()))
            .collect()
    };
    assert_eq!(strip(&a.corpus), strip(&b.corpus));
}
