use gulp_core::classifier::{ClassificationResult, ClassificationSource};
use gulp_core::domain::{normalize_label, Station, Timestamp, WasteCategory};
use gulp_core::fsm::{transition, Action, ControllerState, DepositedItem, Event, FsmConfig, TimerId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn item() -> DepositedItem {
    DepositedItem { label: normalize_label("paper bag").unwrap(), truth: Some(WasteCategory::Biodegradable) }
}

fn result(c: WasteCategory) -> ClassificationResult {
    ClassificationResult { category: c, confidence: 0.9, source: ClassificationSource::Simulated }
}

fn states() -> Vec<ControllerState> {
    let r = result(WasteCategory::Recyclable);
    vec![
        ControllerState::Idle,
        ControllerState::LidOpen,
        ControllerState::Recognizing { item: item() },
        ControllerState::Routing { item: item(), result: r },
        ControllerState::Releasing { item: item(), result: r },
        ControllerState::Celebrating,
        ControllerState::Fault("x".into()),
    ]
}

fn events() -> Vec<Event> {
    let mut v = vec![
        Event::MotionDetected,
        Event::DepositDetected(item()),
        Event::ClassificationFailed,
        Event::RouteComplete,
        Event::ReleaseComplete,
        Event::EmoticonDone,
        Event::ActuatorFault("stall".into()),
    ];
    v.extend(WasteCategory::ALL.map(|c| Event::Classified(result(c))));
    v.extend(TimerId::ALL.map(Event::TimerExpired));
    v
}

#[test]
fn every_state_event_pair_is_handled() {
    let cfg = FsmConfig::default();
    for s in states() {
        for e in events() {
            let (next, actions) = transition(&cfg, &s, &e, Timestamp::ZERO);
            if s.is_fault() {
                assert_eq!(next, s);
                assert!(actions.is_empty());
            }
            // the lid is never opened outside the Idle → LidOpen edge
            if actions.contains(&Action::OpenLid) {
                assert!(s.is_idle() && e == Event::MotionDetected);
            }
        }
    }
}

/// Mostly plausible events with noise, so long runs reach every state.
fn random_event(rng: &mut ChaCha8Rng, all: &[Event]) -> Event {
    if rng.gen_bool(0.01) {
        return Event::ActuatorFault("random".into());
    }
    loop {
        let e = &all[rng.gen_range(0..all.len())];
        if !matches!(e, Event::ActuatorFault(_)) {
            return e.clone();
        }
    }
}

#[test]
fn random_sequences_keep_lid_and_cycle_invariants() {
    let cfg = FsmConfig::default();
    let all = events();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut completed = 0;
    for _ in 0..10_000 {
        let mut state = ControllerState::Idle;
        let mut lid_open = false;
        let mut logs_this_cycle = 0;
        let mut faces_this_cycle = 0;
        for step in 0..60 {
            let e = random_event(&mut rng, &all);
            let prev = state.clone();
            let (next, actions) = transition(&cfg, &state, &e, Timestamp::from_secs(step as f64));
            for a in &actions {
                match a {
                    Action::OpenLid => {
                        assert!(!lid_open, "second OpenLid without CloseLid from {prev:?} on {e:?}");
                        lid_open = true;
                    }
                    Action::CloseLid => lid_open = false,
                    Action::TipStorageBox => {
                        assert!(matches!(prev, ControllerState::Routing { .. }), "tip from {prev:?}")
                    }
                    Action::QueueLog(_) => logs_this_cycle += 1,
                    Action::ShowEmoticon(_) => faces_this_cycle += 1,
                    _ => {}
                }
            }
            if matches!(prev, ControllerState::Celebrating) && next.is_idle() {
                assert_eq!((logs_this_cycle, faces_this_cycle), (1, 1));
                completed += 1;
            }
            if next.is_idle() && !prev.is_idle() {
                logs_this_cycle = 0;
                faces_this_cycle = 0;
            }
            assert!(logs_this_cycle <= 1 && faces_this_cycle <= 1);
            state = next;
        }
    }
    assert!(completed > 100, "random walks should complete cycles, got {completed}");
}

#[test]
fn routed_station_follows_prediction() {
    let cfg = FsmConfig::default();
    for c in WasteCategory::ALL {
        let s = ControllerState::Recognizing { item: item() };
        let (_, actions) = transition(&cfg, &s, &Event::Classified(result(c)), Timestamp::ZERO);
        assert!(actions.contains(&Action::RotateToStation(c.station())));
        assert!(actions.contains(&Action::SetLed { color: c.color(), on: true }));
    }
    assert_eq!(WasteCategory::Recyclable.station(), Station::new(2).unwrap());
}
