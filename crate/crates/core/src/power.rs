//! Solar supply model: panel output, battery state of charge, overcharge
//! curtailment and the deep-discharge lockout latch.
//!
//! Energy bookkeeping is exact: every watt-hour generated is either delivered
//! to the load, lost in conversion, curtailed, or stored.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error("{what} = {value} is out of range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("invalid power config: {0}")]
    InvalidConfig(String),
}

/// Supply chain parameters. Voltages in volts, energy in watt-hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub panel_rated_w: f64,
    /// Assumed 12 V × 70 Ah; the deployed battery's rating is not published.
    pub battery_capacity_wh: f64,
    pub v_full: f64,
    pub v_empty: f64,
    pub v_lockout: f64,
    pub v_reconnect: f64,
    pub charge_limit_v: f64,
    /// Added to the open-circuit voltage while net energy flows in.
    pub charging_bias_v: f64,
    /// Terminal voltage of an exhausted battery that is still loaded.
    pub collapse_v: f64,
    /// Inverter and relay efficiency, `(0, 1]`.
    pub inverter_efficiency: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            panel_rated_w: 200.0,
            battery_capacity_wh: 840.0,
            v_full: 12.8,
            v_empty: 11.8,
            v_lockout: 10.5,
            v_reconnect: 12.5,
            charge_limit_v: 14.4,
            charging_bias_v: 0.3,
            collapse_v: 10.0,
            inverter_efficiency: 1.0,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<(), PowerError> {
        let positive = [
            ("panel_rated_w", self.panel_rated_w),
            ("battery_capacity_wh", self.battery_capacity_wh),
            ("v_full", self.v_full),
            ("v_empty", self.v_empty),
            ("v_lockout", self.v_lockout),
            ("v_reconnect", self.v_reconnect),
            ("charge_limit_v", self.charge_limit_v),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PowerError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.charging_bias_v.is_finite() && self.charging_bias_v >= 0.0) {
            return Err(PowerError::InvalidConfig("charging_bias_v must be >= 0".into()));
        }
        if !(self.collapse_v.is_finite() && self.collapse_v >= 0.0 && self.collapse_v < self.v_lockout) {
            return Err(PowerError::InvalidConfig("collapse_v must lie in [0, v_lockout)".into()));
        }
        if !(self.inverter_efficiency > 0.0 && self.inverter_efficiency <= 1.0) {
            return Err(PowerError::InvalidConfig("inverter_efficiency must lie in (0, 1]".into()));
        }
        if self.v_lockout >= self.v_reconnect {
            return Err(PowerError::InvalidConfig("v_lockout must be below v_reconnect".into()));
        }
        if !(self.v_empty < self.v_full && self.v_full <= self.charge_limit_v) {
            return Err(PowerError::InvalidConfig("need v_empty < v_full <= charge_limit_v".into()));
        }
        Ok(())
    }
}

/// Direction of the battery's net energy flow over the last step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryFlow {
    Idle,
    Charging,
    Discharging,
    /// Empty and unable to meet the connected load.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerState {
    pub soc: f64,
    pub load_connected: bool,
    pub cumulative_generated_wh: f64,
    pub cumulative_delivered_wh: f64,
    pub cumulative_curtailed_wh: f64,
    pub cumulative_loss_wh: f64,
    pub flow: BatteryFlow,
}

impl PowerState {
    pub fn new(soc: f64) -> Result<Self, PowerError> {
        if !(0.0..=1.0).contains(&soc) {
            return Err(PowerError::OutOfRange { what: "soc", value: soc });
        }
        Ok(PowerState {
            soc,
            load_connected: true,
            cumulative_generated_wh: 0.0,
            cumulative_delivered_wh: 0.0,
            cumulative_curtailed_wh: 0.0,
            cumulative_loss_wh: 0.0,
            flow: BatteryFlow::Idle,
        })
    }
}

pub fn panel_power(irradiance_frac: f64, cfg: &PowerConfig) -> Result<f64, PowerError> {
    if !(0.0..=1.0).contains(&irradiance_frac) {
        return Err(PowerError::OutOfRange { what: "irradiance_frac", value: irradiance_frac });
    }
    Ok(irradiance_frac * cfg.panel_rated_w)
}

/// Open-circuit voltage, linear in state of charge.
pub fn battery_voltage(soc: f64, cfg: &PowerConfig) -> f64 {
    cfg.v_empty + soc.clamp(0.0, 1.0) * (cfg.v_full - cfg.v_empty)
}

/// Voltage seen by the protection board given the last step's flow.
pub fn terminal_voltage(state: &PowerState, cfg: &PowerConfig) -> f64 {
    let ocv = battery_voltage(state.soc, cfg);
    match state.flow {
        BatteryFlow::Charging => (ocv + cfg.charging_bias_v).min(cfg.charge_limit_v),
        BatteryFlow::Idle | BatteryFlow::Discharging => ocv,
        BatteryFlow::Exhausted => cfg.collapse_v,
    }
}

pub fn power_step(
    state: &PowerState,
    irradiance_frac: f64,
    load_w: f64,
    dt_s: f64,
    cfg: &PowerConfig,
) -> Result<PowerState, PowerError> {
    if !(load_w.is_finite() && load_w >= 0.0) {
        return Err(PowerError::OutOfRange { what: "load_w", value: load_w });
    }
    if !(dt_s.is_finite() && dt_s > 0.0) {
        return Err(PowerError::OutOfRange { what: "dt_s", value: dt_s });
    }
    let hours = dt_s / 3600.0;
    let generated = panel_power(irradiance_frac, cfg)? * hours;
    let demand = if state.load_connected { load_w * hours } else { 0.0 };
    let eff = cfg.inverter_efficiency;
    let capacity = cfg.battery_capacity_wh;

    let stored = state.soc * capacity;
    let available = stored + generated;
    let wanted_drain = demand / eff;

    let (drain, delivered, exhausted) = if wanted_drain <= available {
        (wanted_drain, demand, false)
    } else {
        (available, available * eff, demand > 0.0)
    };
    let mut after = available - drain;
    let curtailed = (after - capacity).max(0.0);
    after = after.min(capacity).max(0.0);

    let net = generated - drain;
    let flow = if exhausted {
        BatteryFlow::Exhausted
    } else if net > 0.0 {
        BatteryFlow::Charging
    } else if net < 0.0 {
        BatteryFlow::Discharging
    } else {
        BatteryFlow::Idle
    };

    Ok(PowerState {
        soc: (after / capacity).clamp(0.0, 1.0),
        load_connected: state.load_connected,
        cumulative_generated_wh: state.cumulative_generated_wh + generated,
        cumulative_delivered_wh: state.cumulative_delivered_wh + delivered,
        cumulative_curtailed_wh: state.cumulative_curtailed_wh + curtailed,
        cumulative_loss_wh: state.cumulative_loss_wh + (drain - delivered),
        flow,
    })
}

/// Low-voltage-disconnect latch with hysteresis.
pub fn protection_latch(load_connected: bool, voltage: f64, cfg: &PowerConfig) -> bool {
    if load_connected && voltage < cfg.v_lockout {
        false
    } else if !load_connected && voltage > cfg.v_reconnect {
        true
    } else {
        load_connected
    }
}

pub fn protection_step(state: &PowerState, cfg: &PowerConfig) -> PowerState {
    let v = terminal_voltage(state, cfg);
    PowerState { load_connected: protection_latch(state.load_connected, v, cfg), ..*state }
}

/// Energy not accounted for by flows and storage; zero up to rounding.
pub fn conservation_residual(initial_soc: f64, state: &PowerState, cfg: &PowerConfig) -> f64 {
    state.cumulative_generated_wh
        - state.cumulative_delivered_wh
        - state.cumulative_curtailed_wh
        - state.cumulative_loss_wh
        - (state.soc - initial_soc) * cfg.battery_capacity_wh
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HOUR: f64 = 3600.0;

    fn cfg() -> PowerConfig {
        PowerConfig::default()
    }

    #[test]
    fn panel_examples() {
        assert_eq!(panel_power(1.0, &cfg()).unwrap(), 200.0);
        assert_eq!(panel_power(0.0, &cfg()).unwrap(), 0.0);
        assert_eq!(panel_power(0.5, &cfg()).unwrap(), 100.0);
        assert!(panel_power(1.1, &cfg()).is_err());
        assert!(panel_power(-0.1, &cfg()).is_err());
    }

    #[test]
    fn voltage_examples() {
        assert!((battery_voltage(1.0, &cfg()) - 12.8).abs() < 1e-12);
        assert!((battery_voltage(0.0, &cfg()) - 11.8).abs() < 1e-12);
        assert!((battery_voltage(0.5, &cfg()) - 12.3).abs() < 1e-12);
        let mut s = PowerState::new(0.5).unwrap();
        s.flow = BatteryFlow::Charging;
        assert!((terminal_voltage(&s, &cfg()) - 12.6).abs() < 1e-12);
        s.flow = BatteryFlow::Exhausted;
        assert_eq!(terminal_voltage(&s, &cfg()), 10.0);
    }

    #[test]
    fn step_examples() {
        let s = PowerState::new(0.5).unwrap();
        let idle = power_step(&s, 0.0, 0.0, 123.0, &cfg()).unwrap();
        assert_eq!(idle.soc, 0.5);
        assert_eq!(idle.flow, BatteryFlow::Idle);

        let charged = power_step(&s, 0.5, 0.0, HOUR, &cfg()).unwrap();
        assert!((charged.soc - (0.5 + 100.0 / 840.0)).abs() < 1e-12);
        assert!((charged.soc - 0.6190).abs() < 1e-4);

        let nearly = PowerState::new(0.999).unwrap();
        let full = power_step(&nearly, 1.0, 0.0, HOUR, &cfg()).unwrap();
        assert_eq!(full.soc, 1.0);
        assert!((full.cumulative_curtailed_wh - 199.16).abs() < 1e-9);
    }

    #[test]
    fn exhaustion_collapses_voltage() {
        let s = PowerState::new(0.0001).unwrap();
        let drained = power_step(&s, 0.0, 100.0, HOUR, &cfg()).unwrap();
        assert_eq!(drained.soc, 0.0);
        assert_eq!(drained.flow, BatteryFlow::Exhausted);
        assert!((drained.cumulative_delivered_wh - 0.084).abs() < 1e-9);
        assert!(!protection_step(&drained, &cfg()).load_connected);
    }

    #[test]
    fn latch_examples() {
        let c = cfg();
        assert!(!protection_latch(true, 10.4, &c));
        assert!(protection_latch(false, 12.6, &c));
        assert!(protection_latch(true, 11.5, &c));
        assert!(!protection_latch(false, 11.5, &c));
        assert!(!protection_latch(false, 12.5, &c));
        assert!(protection_latch(true, 10.5, &c));
    }

    #[test]
    fn efficiency_losses_are_booked() {
        let c = PowerConfig { inverter_efficiency: 0.8, ..cfg() };
        let s = PowerState::new(0.5).unwrap();
        let n = power_step(&s, 0.0, 80.0, HOUR, &c).unwrap();
        assert!((n.cumulative_delivered_wh - 80.0).abs() < 1e-9);
        assert!((n.cumulative_loss_wh - 20.0).abs() < 1e-9);
        assert!(conservation_residual(0.5, &n, &c).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(PowerConfig { v_lockout: 12.6, ..cfg() }.validate().is_err());
        assert!(PowerConfig { v_full: 15.0, ..cfg() }.validate().is_err());
        assert!(PowerConfig { inverter_efficiency: 0.0, ..cfg() }.validate().is_err());
        assert!(PowerConfig { collapse_v: 10.6, ..cfg() }.validate().is_err());
    }

    #[derive(Debug, Clone)]
    struct Step {
        irr: f64,
        load: f64,
        dt: f64,
    }

    fn steps() -> impl Strategy<Value = Vec<Step>> {
        proptest::collection::vec(
            (0.0f64..=1.0, 0.0f64..400.0, 0.1f64..7200.0).prop_map(|(irr, load, dt)| Step { irr, load, dt }),
            1..60,
        )
    }

    proptest! {
        #[test]
        fn conserves_energy(soc0 in 0.0f64..=1.0, eff in 0.5f64..=1.0, seq in steps()) {
            let c = PowerConfig { inverter_efficiency: eff, ..cfg() };
            let mut s = PowerState::new(soc0).unwrap();
            for st in &seq {
                let prev = s;
                s = protection_step(&power_step(&s, st.irr, st.load, st.dt, &c).unwrap(), &c);
                prop_assert!((0.0..=1.0).contains(&s.soc));
                prop_assert!(s.cumulative_generated_wh >= prev.cumulative_generated_wh);
                prop_assert!(s.cumulative_delivered_wh >= prev.cumulative_delivered_wh);
                prop_assert!(s.cumulative_curtailed_wh >= prev.cumulative_curtailed_wh);
                if !prev.load_connected {
                    prop_assert_eq!(s.cumulative_delivered_wh, prev.cumulative_delivered_wh);
                }
                let scale = s.cumulative_generated_wh.max(c.battery_capacity_wh);
                prop_assert!(conservation_residual(soc0, &s, &c).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn lockout_holds_until_reconnect_voltage(soc0 in 0.0f64..=1.0, seq in steps()) {
            let c = cfg();
            let mut s = PowerState::new(soc0).unwrap();
            for st in &seq {
                let stepped = power_step(&s, st.irr, st.load, st.dt, &c).unwrap();
                let next = protection_step(&stepped, &c);
                if !s.load_connected && next.load_connected {
                    prop_assert!(terminal_voltage(&stepped, &c) > c.v_reconnect);
                }
                s = next;
            }
        }
    }
}
