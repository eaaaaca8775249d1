//! Deposit lifecycle controller.
//!
//! `transition` is a pure, total function of `(state, event, now)`. Pairs that
//! have no defined meaning leave the state unchanged and emit nothing.

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassificationResult, ClassificationSource};
use crate::domain::{DepositEvent, GarbageLabel, LedColor, Station, Timestamp, WasteCategory};

/// Category used when an item cannot be classified.
pub const FALLBACK_CATEGORY: WasteCategory = WasteCategory::NonBiodegradable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerId {
    LidTimeout,
    CountdownTimeout,
    RouteTimeout,
}

impl TimerId {
    pub const ALL: [TimerId; 3] = [TimerId::LidTimeout, TimerId::CountdownTimeout, TimerId::RouteTimeout];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsmConfig {
    pub lid_timeout_s: f64,
    pub countdown_s: f64,
    pub route_timeout_s: f64,
}

impl Default for FsmConfig {
    fn default() -> Self {
        FsmConfig {
            lid_timeout_s: 10.0,
            countdown_s: 5.0,
            route_timeout_s: 15.0,
        }
    }
}

/// The item sitting in the temporary storage box. In simulation the scenario
/// label stands in for the captured image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepositedItem {
    pub label: GarbageLabel,
    pub truth: Option<WasteCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", content = "data", rename_all = "snake_case")]
pub enum ControllerState {
    Idle,
    LidOpen,
    Recognizing { item: DepositedItem },
    Routing { item: DepositedItem, result: ClassificationResult },
    Releasing { item: DepositedItem, result: ClassificationResult },
    Celebrating,
    Fault(String),
}

impl ControllerState {
    pub fn tag(&self) -> &'static str {
        match self {
            ControllerState::Idle => "idle",
            ControllerState::LidOpen => "lid_open",
            ControllerState::Recognizing { .. } => "recognizing",
            ControllerState::Routing { .. } => "routing",
            ControllerState::Releasing { .. } => "releasing",
            ControllerState::Celebrating => "celebrating",
            ControllerState::Fault(_) => "fault",
        }
    }

    pub fn is_idle(&self) -> bool {
        matches!(self, ControllerState::Idle)
    }

    pub fn is_fault(&self) -> bool {
        matches!(self, ControllerState::Fault(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", content = "data", rename_all = "snake_case")]
pub enum Event {
    MotionDetected,
    DepositDetected(DepositedItem),
    Classified(ClassificationResult),
    ClassificationFailed,
    RouteComplete,
    ReleaseComplete,
    EmoticonDone,
    TimerExpired(TimerId),
    ActuatorFault(String),
}

impl Event {
    pub fn tag(&self) -> &'static str {
        match self {
            Event::MotionDetected => "motion_detected",
            Event::DepositDetected(_) => "deposit_detected",
            Event::Classified(_) => "classified",
            Event::ClassificationFailed => "classification_failed",
            Event::RouteComplete => "route_complete",
            Event::ReleaseComplete => "release_complete",
            Event::EmoticonDone => "emoticon_done",
            Event::TimerExpired(_) => "timer_expired",
            Event::ActuatorFault(_) => "actuator_fault",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emoticon {
    Happy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", content = "args", rename_all = "snake_case")]
pub enum Action {
    OpenLid,
    CloseLid,
    StartTimer { timer: TimerId, duration_s: f64 },
    CancelTimer(TimerId),
    CaptureImage,
    RotateToStation(Station),
    SetLed { color: LedColor, on: bool },
    TipStorageBox,
    ShowEmoticon(Emoticon),
    QueueLog(DepositEvent),
}

impl Action {
    pub fn tag(&self) -> &'static str {
        match self {
            Action::OpenLid => "open_lid",
            Action::CloseLid => "close_lid",
            Action::StartTimer { .. } => "start_timer",
            Action::CancelTimer(_) => "cancel_timer",
            Action::CaptureImage => "capture_image",
            Action::RotateToStation(_) => "rotate_to_station",
            Action::SetLed { .. } => "set_led",
            Action::TipStorageBox => "tip_storage_box",
            Action::ShowEmoticon(_) => "show_emoticon",
            Action::QueueLog(_) => "queue_log",
        }
    }
}

pub fn init() -> ControllerState {
    ControllerState::Idle
}

fn fallback_result() -> ClassificationResult {
    ClassificationResult {
        category: FALLBACK_CATEGORY,
        confidence: 0.0,
        source: ClassificationSource::Fallback,
    }
}

fn route(cfg: &FsmConfig, item: DepositedItem, mut result: ClassificationResult) -> (ControllerState, Vec<Action>) {
    result.confidence = if result.confidence.is_nan() { 0.0 } else { result.confidence.clamp(0.0, 1.0) };
    let actions = vec![
        Action::CancelTimer(TimerId::CountdownTimeout),
        Action::SetLed { color: result.category.color(), on: true },
        Action::RotateToStation(result.category.station()),
        Action::StartTimer { timer: TimerId::RouteTimeout, duration_s: cfg.route_timeout_s },
    ];
    (ControllerState::Routing { item, result }, actions)
}

fn fault(reason: &str) -> (ControllerState, Vec<Action>) {
    let reason = if reason.trim().is_empty() { "unspecified fault" } else { reason };
    let mut actions = vec![Action::CloseLid];
    actions.extend(LedColor::ALL.iter().map(|&color| Action::SetLed { color, on: false }));
    (ControllerState::Fault(reason.to_string()), actions)
}

/// Advances the controller by one event.
pub fn transition(
    cfg: &FsmConfig,
    state: &ControllerState,
    event: &Event,
    now: Timestamp,
) -> (ControllerState, Vec<Action>) {
    use ControllerState as S;

    match (state, event) {
        // absorbing until an external reset
        (S::Fault(_), _) => (state.clone(), Vec::new()),
        (_, Event::ActuatorFault(detail)) => fault(detail),

        (S::Idle, Event::MotionDetected) => (
            S::LidOpen,
            vec![
                Action::OpenLid,
                Action::StartTimer { timer: TimerId::LidTimeout, duration_s: cfg.lid_timeout_s },
            ],
        ),

        (S::LidOpen, Event::DepositDetected(item)) => (
            S::Recognizing { item: item.clone() },
            vec![
                Action::CancelTimer(TimerId::LidTimeout),
                Action::CloseLid,
                Action::CaptureImage,
                Action::StartTimer { timer: TimerId::CountdownTimeout, duration_s: cfg.countdown_s },
            ],
        ),
        (S::LidOpen, Event::TimerExpired(TimerId::LidTimeout)) => (S::Idle, vec![Action::CloseLid]),

        (S::Recognizing { item }, Event::Classified(result)) => route(cfg, item.clone(), *result),
        (S::Recognizing { item }, Event::ClassificationFailed)
        | (S::Recognizing { item }, Event::TimerExpired(TimerId::CountdownTimeout)) => {
            route(cfg, item.clone(), fallback_result())
        }

        (S::Routing { item, result }, Event::RouteComplete) => (
            S::Releasing { item: item.clone(), result: *result },
            vec![Action::CancelTimer(TimerId::RouteTimeout), Action::TipStorageBox],
        ),
        (S::Routing { .. }, Event::TimerExpired(TimerId::RouteTimeout)) => fault("route timeout"),

        (S::Releasing { item, result }, Event::ReleaseComplete) => {
            let record = DepositEvent::new(
                now,
                item.label.clone(),
                item.truth,
                result.category,
                result.confidence,
            );
            (
                S::Celebrating,
                vec![
                    Action::ShowEmoticon(Emoticon::Happy),
                    Action::SetLed { color: result.category.color(), on: false },
                    Action::QueueLog(record),
                ],
            )
        }

        (S::Celebrating, Event::EmoticonDone) => (S::Idle, Vec::new()),

        _ => (state.clone(), Vec::new()),
    }
}

/// Owns a controller state and its configuration.
#[derive(Debug, Clone)]
pub struct Controller {
    config: FsmConfig,
    state: ControllerState,
}

impl Controller {
    pub fn new(config: FsmConfig) -> Self {
        Controller { config, state: init() }
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    pub fn config(&self) -> &FsmConfig {
        &self.config
    }

    pub fn handle(&mut self, event: &Event, now: Timestamp) -> Vec<Action> {
        let (next, actions) = transition(&self.config, &self.state, event, now);
        self.state = next;
        actions
    }

    pub fn reset(&mut self) {
        self.state = init();
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::domain::normalize_label;

    pub(crate) fn item(label: &str, truth: Option<WasteCategory>) -> DepositedItem {
        DepositedItem { label: normalize_label(label).unwrap(), truth }
    }

    pub(crate) fn result(category: WasteCategory, confidence: f64) -> ClassificationResult {
        ClassificationResult { category, confidence, source: ClassificationSource::Simulated }
    }

    /// One representative of every state tag.
    pub(crate) fn all_states() -> Vec<ControllerState> {
        let it = item("cardboard", Some(WasteCategory::Biodegradable));
        let r = result(WasteCategory::Biodegradable, 0.9);
        vec![
            ControllerState::Idle,
            ControllerState::LidOpen,
            ControllerState::Recognizing { item: it.clone() },
            ControllerState::Routing { item: it.clone(), result: r },
            ControllerState::Releasing { item: it, result: r },
            ControllerState::Celebrating,
            ControllerState::Fault("jam".into()),
        ]
    }

    /// One representative of every event tag, with every timer id.
    pub(crate) fn all_events() -> Vec<Event> {
        let mut events = vec![
            Event::MotionDetected,
            Event::DepositDetected(item("water plastic bottle", Some(WasteCategory::Recyclable))),
            Event::Classified(result(WasteCategory::Recyclable, 0.95)),
            Event::ClassificationFailed,
            Event::RouteComplete,
            Event::ReleaseComplete,
            Event::EmoticonDone,
            Event::ActuatorFault("servo stall".into()),
        ];
        events.extend(TimerId::ALL.iter().map(|t| Event::TimerExpired(*t)));
        events
    }

    const T: Timestamp = Timestamp::ZERO;

    fn step(state: &ControllerState, event: Event) -> (ControllerState, Vec<Action>) {
        transition(&FsmConfig::default(), state, &event, T)
    }

    #[test]
    fn init_is_idle_and_ignores_stale_timers() {
        assert_eq!(init(), ControllerState::Idle);
        assert_eq!(init(), init());
        for t in TimerId::ALL {
            assert_eq!(step(&init(), Event::TimerExpired(t)), (ControllerState::Idle, vec![]));
        }
    }

    #[test]
    fn motion_opens_lid() {
        assert_eq!(
            step(&ControllerState::Idle, Event::MotionDetected),
            (
                ControllerState::LidOpen,
                vec![Action::OpenLid, Action::StartTimer { timer: TimerId::LidTimeout, duration_s: 10.0 }]
            )
        );
    }

    #[test]
    fn deposit_closes_lid_before_capture() {
        let it = item("cardboard", Some(WasteCategory::Biodegradable));
        let (s, a) = step(&ControllerState::LidOpen, Event::DepositDetected(it.clone()));
        assert_eq!(s, ControllerState::Recognizing { item: it });
        assert_eq!(
            a,
            vec![
                Action::CancelTimer(TimerId::LidTimeout),
                Action::CloseLid,
                Action::CaptureImage,
                Action::StartTimer { timer: TimerId::CountdownTimeout, duration_s: 5.0 },
            ]
        );
    }

    #[test]
    fn recyclable_lights_yellow_and_rotates_to_two() {
        let it = item("water plastic bottle", Some(WasteCategory::Recyclable));
        let (s, a) = step(
            &ControllerState::Recognizing { item: it },
            Event::Classified(result(WasteCategory::Recyclable, 0.95)),
        );
        assert_eq!(s.tag(), "routing");
        assert_eq!(
            a,
            vec![
                Action::CancelTimer(TimerId::CountdownTimeout),
                Action::SetLed { color: LedColor::Yellow, on: true },
                Action::RotateToStation(Station::new(2).unwrap()),
                Action::StartTimer { timer: TimerId::RouteTimeout, duration_s: 15.0 },
            ]
        );
    }

    #[test]
    fn undefined_pairs_are_noops() {
        assert_eq!(step(&ControllerState::Idle, Event::RouteComplete), (ControllerState::Idle, vec![]));
        assert_eq!(step(&ControllerState::LidOpen, Event::MotionDetected), (ControllerState::LidOpen, vec![]));
    }

    #[test]
    fn lid_timeout_returns_to_idle() {
        assert_eq!(
            step(&ControllerState::LidOpen, Event::TimerExpired(TimerId::LidTimeout)),
            (ControllerState::Idle, vec![Action::CloseLid])
        );
    }

    #[test]
    fn failed_classification_routes_to_general_waste() {
        for failure in [Event::ClassificationFailed, Event::TimerExpired(TimerId::CountdownTimeout)] {
            let s0 = ControllerState::Recognizing { item: item("mystery object", None) };
            let (s, a) = step(&s0, failure);
            assert!(a.contains(&Action::RotateToStation(Station::new(1).unwrap())));
            assert!(a.contains(&Action::SetLed { color: LedColor::Red, on: true }));
            match s {
                ControllerState::Routing { result, .. } => {
                    assert_eq!(result.category, WasteCategory::NonBiodegradable);
                    assert_eq!(result.confidence, 0.0);
                    assert_eq!(result.source, ClassificationSource::Fallback);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn full_cycle_logs_once() {
        let cfg = FsmConfig::default();
        let mut c = Controller::new(cfg);
        let it = item("milk tea cup", Some(WasteCategory::NonBiodegradable));
        let mut trace = Vec::new();
        let t = |s: f64| Timestamp::from_secs(s);
        trace.extend(c.handle(&Event::MotionDetected, t(0.0)));
        trace.extend(c.handle(&Event::DepositDetected(it.clone()), t(1.0)));
        trace.extend(c.handle(&Event::Classified(result(WasteCategory::NonBiodegradable, 0.9)), t(1.5)));
        trace.extend(c.handle(&Event::RouteComplete, t(2.0)));
        trace.extend(c.handle(&Event::ReleaseComplete, t(3.0)));
        trace.extend(c.handle(&Event::EmoticonDone, t(5.0)));
        assert!(c.state().is_idle());

        let logs: Vec<_> = trace.iter().filter_map(|a| match a {
            Action::QueueLog(e) => Some(e.clone()),
            _ => None,
        }).collect();
        assert_eq!(logs.len(), 1);
        assert_eq!(logs[0].at, t(3.0));
        assert_eq!(logs[0].label, it.label);
        assert_eq!(logs[0].routed_station.index(), 1);
        assert_eq!(trace.iter().filter(|a| matches!(a, Action::ShowEmoticon(_))).count(), 1);
        assert!(trace.contains(&Action::SetLed { color: LedColor::Red, on: false }));
    }

    #[test]
    fn faults_close_lid_and_latch() {
        for s in all_states() {
            let (next, actions) = step(&s, Event::ActuatorFault("servo stall".into()));
            if s.is_fault() {
                assert_eq!((next, actions), (s.clone(), vec![]));
                continue;
            }
            assert_eq!(next, ControllerState::Fault("servo stall".into()));
            assert_eq!(actions[0], Action::CloseLid);
            assert_eq!(actions.len(), 4);
            for e in all_events() {
                assert_eq!(step(&next, e), (next.clone(), vec![]));
            }
        }
        assert_eq!(step(&ControllerState::Idle, Event::ActuatorFault(" ".into())).0,
            ControllerState::Fault("unspecified fault".into()));
    }

    #[test]
    fn route_timeout_faults() {
        let s = ControllerState::Routing {
            item: item("cardboard", None),
            result: result(WasteCategory::Biodegradable, 1.0),
        };
        let (next, _) = step(&s, Event::TimerExpired(TimerId::RouteTimeout));
        assert_eq!(next, ControllerState::Fault("route timeout".into()));
    }

    #[test]
    fn total_and_deterministic() {
        for s in all_states() {
            for e in all_events() {
                let a = step(&s, e.clone());
                let b = step(&s, e);
                assert_eq!(serde_json::to_string(&a.1).unwrap(), serde_json::to_string(&b.1).unwrap());
                assert_eq!(a.0, b.0);
            }
        }
    }
}
