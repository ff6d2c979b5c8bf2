//! The dual-process memory engine: episodic window plus consolidated profile.

use std::sync::mpsc::{self, Sender};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};

use super::consolidate::{consolidate, should_consolidate, ConsolidationPolicy, Consolidator};
use super::prompt::{ConsolidationRequest, DEFAULT_TEMPLATE};
use super::{SemanticProfile, SOFT_WARNING_TOKENS};
use crate::backends::CallRecord;
use crate::context::{assemble_context, AssembledContext, ContextError};
use crate::episodic::{BufferError, EpisodicBuffer, DEFAULT_WINDOW};
use crate::message::Message;
use crate::sync::Published;
use crate::tokens::TokenCounter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationEvent {
    /// Index of the agent turn that triggered the event.
    pub trigger_index: u64,
    /// Messages seen when the event ran (`trigger_index + 1`).
    pub message_count: u64,
    pub profile_tokens: u64,
    pub version: u64,
    pub succeeded: bool,
}

/// Audit trail kept alongside the live profile.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConsolidationLog {
    pub history: Vec<SemanticProfile>,
    pub events: Vec<ConsolidationEvent>,
    pub calls: Vec<CallRecord>,
    pub failures: Vec<String>,
}

/// The published profile plus its audit log.
#[derive(Debug, Default)]
pub struct ProfileStore {
    current: Published<SemanticProfile>,
    log: Mutex<ConsolidationLog>,
}

impl ProfileStore {
    pub fn snapshot(&self) -> Arc<SemanticProfile> {
        self.current.load()
    }

    pub fn log(&self) -> MutexGuard<'_, ConsolidationLog> {
        self.log.lock().unwrap_or_else(|e| e.into_inner())
    }
}

/// Messages handed to one consolidation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsolidationJob {
    pub snapshot: Vec<Message>,
    pub exchange: Vec<Message>,
}

struct JobRunner {
    store: Arc<ProfileStore>,
    consolidator: Arc<dyn Consolidator>,
    policy: ConsolidationPolicy,
    template: String,
    counter: TokenCounter,
}

impl JobRunner {
    fn run(&self, job: ConsolidationJob) {
        let prior = self.store.current.load();
        let trigger = job.exchange.last().map_or(0, |m| m.index);
        let req = ConsolidationRequest {
            episodic_snapshot: job.snapshot,
            prior_profile: (*prior).clone(),
            latest_exchange: job.exchange,
            prompt_template: self.template.clone(),
        };
        let outcome = consolidate(&req, self.consolidator.as_ref(), &self.policy, &self.counter);
        let succeeded = outcome.succeeded();
        if succeeded {
            if outcome.profile.token_count > SOFT_WARNING_TOKENS {
                log::warn!(
                    "profile reached {} tokens (soft limit {SOFT_WARNING_TOKENS})",
                    outcome.profile.token_count
                );
            }
            self.store.current.store(outcome.profile.clone());
        }
        let mut log = self.store.log();
        if succeeded {
            log.history.push(outcome.profile.clone());
        } else if let Some(e) = &outcome.error {
            log.failures.push(format!("message {trigger}: {e}"));
        }
        log.calls.extend(outcome.calls);
        log.events.push(ConsolidationEvent {
            trigger_index: trigger,
            message_count: trigger + 1,
            profile_tokens: outcome.profile.token_count,
            version: outcome.profile.version,
            succeeded,
        });
    }
}

enum WorkerMsg {
    Job(ConsolidationJob),
    Flush(Sender<()>),
}

/// Single background thread: one consolidation in flight, jobs in order.
struct Worker {
    tx: Option<Sender<WorkerMsg>>,
    handle: Option<JoinHandle<()>>,
}

impl Worker {
    fn spawn(runner: JobRunner) -> Self {
        let (tx, rx) = mpsc::channel::<WorkerMsg>();
        let handle = std::thread::spawn(move || {
            for msg in rx {
                match msg {
                    WorkerMsg::Job(job) => runner.run(job),
                    WorkerMsg::Flush(done) => {
                        let _ = done.send(());
                    }
                }
            }
        });
        Self {
            tx: Some(tx),
            handle: Some(handle),
        }
    }

    fn submit(&self, job: ConsolidationJob) {
        if let Some(tx) = &self.tx {
            let _ = tx.send(WorkerMsg::Job(job));
        }
    }

    fn flush(&self) {
        let (done_tx, done_rx) = mpsc::channel();
        if let Some(tx) = &self.tx {
            if tx.send(WorkerMsg::Flush(done_tx)).is_ok() {
                let _ = done_rx.recv();
            }
        }
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

enum Driver {
    Inline(JobRunner),
    Background(Worker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionMode {
    /// Consolidate on the ingesting thread before `ingest` returns.
    #[default]
    Inline,
    /// Consolidate on a background thread; inference reads whatever profile
    /// has been published.
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualProcessConfig {
    pub window: usize,
    pub policy: ConsolidationPolicy,
    pub preamble: String,
    pub template: String,
    pub mode: ExecutionMode,
}

impl Default for DualProcessConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            policy: ConsolidationPolicy::default(),
            preamble: String::new(),
            template: DEFAULT_TEMPLATE.to_string(),
            mode: ExecutionMode::Inline,
        }
    }
}

/// Episodic window and consolidated profile, presented together at inference.
///
/// Each consolidation receives every message since the previous one (at
/// least the current window), so facts that scroll out of the window between
/// consolidations are still seen by the consolidator.
pub struct DualProcessMemory {
    buffer: EpisodicBuffer,
    store: Arc<ProfileStore>,
    policy: ConsolidationPolicy,
    preamble: String,
    counter: TokenCounter,
    pending: Vec<Message>,
    driver: Driver,
}

impl DualProcessMemory {
    pub fn new(
        config: DualProcessConfig,
        consolidator: Arc<dyn Consolidator>,
        counter: TokenCounter,
    ) -> Result<Self, BufferError> {
        let buffer = EpisodicBuffer::new(config.window)?;
        let store = Arc::new(ProfileStore::default());
        let runner = JobRunner {
            store: Arc::clone(&store),
            consolidator,
            policy: config.policy.clone(),
            template: config.template,
            counter: counter.clone(),
        };
        let driver = match config.mode {
            ExecutionMode::Inline => Driver::Inline(runner),
            ExecutionMode::Background => Driver::Background(Worker::spawn(runner)),
        };
        Ok(Self {
            buffer,
            store,
            policy: config.policy,
            preamble: config.preamble,
            counter,
            pending: Vec::new(),
            driver,
        })
    }

    /// Appends a turn and schedules a consolidation when the policy says so.
    pub fn ingest(&mut self, msg: Message) -> Result<(), BufferError> {
        let index = msg.index;
        self.buffer.append(msg.clone())?;
        self.pending.push(msg);
        if should_consolidate(index, &self.policy) {
            let job = self.take_job();
            match &self.driver {
                Driver::Inline(runner) => runner.run(job),
                Driver::Background(worker) => worker.submit(job),
            }
        }
        Ok(())
    }

    fn take_job(&mut self) -> ConsolidationJob {
        let mut snapshot = std::mem::take(&mut self.pending);
        let first = snapshot.first().map_or(u64::MAX, |m| m.index);
        let earlier: Vec<Message> = self.buffer.iter().filter(|m| m.index < first).cloned().collect();
        snapshot.splice(0..0, earlier);
        let n = snapshot.len();
        let exchange = snapshot[n.saturating_sub(2)..].to_vec();
        ConsolidationJob { snapshot, exchange }
    }

    /// Blocks until every submitted consolidation has finished.
    pub fn flush(&self) {
        if let Driver::Background(worker) = &self.driver {
            worker.flush();
        }
    }

    pub fn profile(&self) -> Arc<SemanticProfile> {
        self.store.snapshot()
    }

    pub fn window(&self) -> Vec<Message> {
        self.buffer.window()
    }

    pub fn total_messages(&self) -> u64 {
        self.buffer.total_appended()
    }

    pub fn store(&self) -> &Arc<ProfileStore> {
        &self.store
    }

    /// Inference context over the currently published profile.
    pub fn context(&self, query: &str) -> Result<AssembledContext, ContextError> {
        let profile = self.profile();
        assemble_context(&self.preamble, &profile.text, &self.buffer.window(), query, &self.counter)
    }

    pub fn events(&self) -> Vec<ConsolidationEvent> {
        self.store.log().events.clone()
    }

    pub fn growth_series(&self) -> Vec<(u64, u64)> {
        super::profile_growth_series(&self.store.log().events)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{CallOutcome, LatencyModel, ScriptedBehavior, ScriptedChat};
    use crate::message::alternating_role;
    use crate::profile::{ConsolidationError, LlmConsolidator, RuleConsolidator, RuleMode};
    use std::time::Duration;

    fn msg(i: u64, text: &str) -> Message {
        Message::new(i, alternating_role(i), text, &TokenCounter::default())
    }

    fn engine(cadence: u64, mode: ExecutionMode) -> DualProcessMemory {
        DualProcessMemory::new(
            DualProcessConfig {
                policy: ConsolidationPolicy::with_cadence(cadence),
                mode,
                ..DualProcessConfig::default()
            },
            Arc::new(RuleConsolidator::new(RuleMode::Exact)),
            TokenCounter::default(),
        )
        .unwrap()
    }

    #[test]
    fn facts_outside_window_survive_catch_up() {
        let mut e = engine(10, ExecutionMode::Inline);
        for i in 0..20 {
            let text = if i == 2 { "FACT early=kept;".to_string() } else { format!("filler {i}") };
            e.ingest(msg(i, &text)).unwrap();
        }
        assert_eq!(e.profile().text, "FACT early=kept;");
        assert_eq!(e.profile().last_consolidated_index, Some(19));
        assert!(e.window().iter().all(|m| m.index >= 10));
    }

    #[test]
    fn versions_and_coverage_are_monotone() {
        let mut e = engine(1, ExecutionMode::Inline);
        for i in 0..60 {
            e.ingest(msg(i, &format!("FACT k{}=v{i};", i % 7))).unwrap();
        }
        let log = e.store().log();
        assert_eq!(log.history.len(), 30);
        for w in log.history.windows(2) {
            assert_eq!(w[1].version, w[0].version + 1);
            assert!(w[1].last_consolidated_index >= w[0].last_consolidated_index);
        }
        assert_eq!(log.calls.len(), 30);
    }

    #[test]
    fn background_matches_inline() {
        let mut a = engine(2, ExecutionMode::Inline);
        let mut b = engine(2, ExecutionMode::Background);
        for i in 0..200 {
            let t = format!("FACT key{}=value{};", i % 13, i);
            a.ingest(msg(i, &t)).unwrap();
            b.ingest(msg(i, &t)).unwrap();
        }
        b.flush();
        assert_eq!(a.profile(), b.profile());
        assert_eq!(a.events(), b.events());
    }

    /// Chat backend that sleeps, to keep a consolidation in flight.
    struct Slow(ScriptedChat);
    impl crate::backends::ChatBackend for Slow {
        fn model(&self) -> &str {
            self.0.model()
        }
        fn hard_limit(&self) -> u64 {
            self.0.hard_limit()
        }
        fn simulated(&self) -> bool {
            true
        }
        fn send(&self, r: &crate::backends::ChatRequest) -> crate::backends::Completion {
            std::thread::sleep(Duration::from_millis(300));
            self.0.send(r)
        }
    }

    #[test]
    fn inference_does_not_wait_for_consolidation() {
        let slow = Slow(ScriptedChat::new(
            "mini".into(),
            ScriptedBehavior::FixedResponse("NEW PROFILE".into()),
            LatencyModel::default(),
            128_000,
        ));
        let mut e = DualProcessMemory::new(
            DualProcessConfig {
                mode: ExecutionMode::Background,
                ..DualProcessConfig::default()
            },
            Arc::new(LlmConsolidator::new(Arc::new(slow), 256)),
            TokenCounter::default(),
        )
        .unwrap();
        e.ingest(msg(0, "hello")).unwrap();
        e.ingest(msg(1, "hi")).unwrap();
        let started = std::time::Instant::now();
        let ctx = e.context("anything?").unwrap();
        assert!(started.elapsed() < Duration::from_millis(200));
        assert!(ctx.profile_text.is_empty() || ctx.profile_text == "NEW PROFILE");
        e.flush();
        assert_eq!(e.profile().text, "NEW PROFILE");
    }

    #[test]
    fn failed_consolidation_is_logged_not_fatal() {
        let failing = LlmConsolidator::new(
            Arc::new(ScriptedChat::new(
                "mini".into(),
                ScriptedBehavior::FailWithError("down".into()),
                LatencyModel::default(),
                128_000,
            )),
            256,
        );
        let mut e = DualProcessMemory::new(
            DualProcessConfig::default(),
            Arc::new(failing),
            TokenCounter::default(),
        )
        .unwrap();
        for i in 0..4 {
            e.ingest(msg(i, "text")).unwrap();
        }
        let log = e.store().log();
        assert_eq!(log.failures.len(), 2);
        assert!(log.events.iter().all(|ev| !ev.succeeded && ev.version == 0));
        assert!(log.calls.iter().all(|c| c.outcome == CallOutcome::Error));
        drop(log);
        assert_eq!(*e.profile(), SemanticProfile::empty());
        let _ = ConsolidationError::EmptyResponse;
    }

    #[test]
    fn growth_is_affine_for_fixed_size_facts() {
        // One ~30-token fact per 10 messages; cadence 5 consolidates every 10.
        let mut e = engine(5, ExecutionMode::Inline);
        for i in 0..2000u64 {
            let text = if i % 10 == 0 {
                format!("FACT f{:05}={};", i / 10, "x".repeat(106))
            } else {
                "chatter".to_string()
            };
            e.ingest(msg(i, &text)).unwrap();
        }
        let series = e.growth_series();
        assert_eq!(series.len(), 200);
        let (x0, y0) = series[0];
        let (x1, y1) = series[series.len() - 1];
        let slope = (y1 - y0) as f64 / (x1 - x0) as f64;
        for &(x, y) in &series {
            let predicted = y0 as f64 + slope * (x - x0) as f64;
            assert!((y as f64 - predicted).abs() <= 1.0, "{x}: {y} vs {predicted}");
        }
        assert!((slope - 3.0).abs() < 0.05, "{slope}");
    }
}
