//! Atomic and hardware parameters as functions of the principal quantum number.
//!
//! Values come from a shipped table (`data/rb87_ns.csv`) or any file with the
//! same schema. Outside the tabulated range the table can fall back to
//! power laws anchored at the reference row: `C6 ~ n^11`, `d_er ~ n^-3/2`,
//! `Gamma0 ~ n^-3`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::mhz;

/// The table shipped with the crate.
pub const BUILTIN_TABLE: &str = include_str!("../../../data/rb87_ns.csv");

/// Column names, in order. The header row is mandatory.
pub const COLUMNS: [&str; 10] =
    ["n", "c6_MHz_um6", "d_er_rel", "n_eff", "tau_s_ns", "gamma", "bbr_a", "bbr_b", "bbr_c", "bbr_d"];

/// Decay rate of the 5P3/2 intermediate state (tau = 26.24 ns), 1/us.
pub const GAMMA_E_5P32: f64 = 1.0 / 26.24e-3;

const E_A0: f64 = 8.478_353_625_5e-30; // C m
const HBAR: f64 = 1.054_571_817e-34; // J s
const C_LIGHT: f64 = 299_792_458.0;
const EPS0: f64 = 8.854_187_812_8e-12;

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("cannot read parameter table {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parameter table schema violation at {location}: {msg}")]
    Schema { location: String, msg: String },
    #[error("row n={n}: field {field} must be positive, got {value}")]
    NonPositive { n: u32, field: &'static str, value: f64 },
    #[error("duplicate row for n={0}")]
    DuplicateN(u32),
    #[error("n={0} is outside the table and scaling-law fallback is disabled")]
    OutOfRange(u32),
    #[error("temperature must be non-negative, got {0} K")]
    NegativeTemperature(f64),
    #[error("intermediate detuning delta_ge must be nonzero")]
    ZeroDeltaGe,
    #[error("no Rabi anchor: set omega_anchor or provide d_er_ref_ea0 in the table")]
    MissingAnchor,
    #[error("invalid hardware constraint: {0}")]
    Hardware(String),
}

/// One tabulated principal quantum number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRow {
    pub n: u32,
    /// Plain MHz um^6 as stored on disk.
    pub c6_mhz_um6: f64,
    pub d_er_rel: f64,
    pub n_eff: f64,
    pub tau_s_ns: f64,
    pub gamma: f64,
    pub bbr: [f64; 4],
}

impl ParamRow {
    /// Radiative (0 K) decay rate, 1/us: `1 / (tau_s n_eff^gamma)`.
    pub fn gamma0(&self) -> f64 {
        1.0 / (self.tau_s_ns * 1e-3 * self.n_eff.powf(self.gamma))
    }

    /// Blackbody-induced rate, 1/us, from the `A / n_eff^D * 2.14e10 / (exp(315780 B / (n_eff^C theta)) - 1)` fit (s^-1).
    pub fn gamma_bbr(&self, theta: f64) -> f64 {
        bbr_fit(&self.bbr, self.n_eff, theta)
    }
}

fn bbr_fit(c: &[f64; 4], n_eff: f64, theta: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    let [a, b, cc, d] = *c;
    let x = 315_780.0 * b / (n_eff.powf(cc) * theta);
    a / n_eff.powf(d) * 2.14e10 / x.exp_m1() * 1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    rows: BTreeMap<u32, ParamRow>,
    pub source: String,
    pub n_ref: u32,
    /// Absolute |e> -> |r> dipole element at `n_ref`, in e a0, if known.
    pub d_er_ref_ea0: Option<f64>,
    pub fallback: bool,
}

pub fn load_param_table(path: &Path) -> Result<ParamTable, ParamError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ParamError::Io { path: path.display().to_string(), source })?;
    ParamTable::parse(&text, &path.display().to_string())
}

impl ParamTable {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TABLE, "builtin:rb87_ns.csv").expect("shipped table is valid")
    }

    /// Parse table text. `label` names the source in errors and metadata.
    pub fn parse(text: &str, label: &str) -> Result<Self, ParamError> {
        let schema = |location: String, msg: String| ParamError::Schema { location, msg };

        let mut meta = BTreeMap::new();
        for line in text.lines() {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some((k, v)) = rest.split_once(':') {
                    let k = k.trim();
                    if !k.is_empty() && !k.contains(char::is_whitespace) {
                        meta.insert(k.to_string(), v.trim().to_string());
                    }
                }
            }
        }

        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| schema(format!("{label}: header"), e.to_string()))?.clone();
        if header.is_empty() {
            return Err(schema(format!("{label}: header"), "missing header row".into()));
        }
        let got: Vec<&str> = header.iter().collect();
        if got != COLUMNS {
            return Err(schema(format!("{label}: header"), format!("expected columns {:?}, got {:?}", COLUMNS, got)));
        }

        let mut rows = BTreeMap::new();
        for (i, rec) in rdr.records().enumerate() {
            let loc = |field: &str| format!("{label}: data row {}, field {field}", i + 1);
            let rec = rec.map_err(|e| schema(loc("*"), e.to_string()))?;
            if rec.len() != COLUMNS.len() {
                return Err(schema(loc("*"), format!("expected {} fields, got {}", COLUMNS.len(), rec.len())));
            }
            let num = |j: usize| -> Result<f64, ParamError> {
                rec[j]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| schema(loc(COLUMNS[j]), format!("not a finite number: {:?}", &rec[j])))
            };
            let n: u32 = rec[0].parse().map_err(|_| schema(loc("n"), format!("not an integer: {:?}", &rec[0])))?;
            let row = ParamRow {
                n,
                c6_mhz_um6: num(1)?,
                d_er_rel: num(2)?,
                n_eff: num(3)?,
                tau_s_ns: num(4)?,
                gamma: num(5)?,
                bbr: [num(6)?, num(7)?, num(8)?, num(9)?],
            };
            let checks: [(&'static str, f64); 9] = [
                ("c6_MHz_um6", row.c6_mhz_um6),
                ("d_er_rel", row.d_er_rel),
                ("n_eff", row.n_eff),
                ("tau_s_ns", row.tau_s_ns),
                ("gamma", row.gamma),
                ("bbr_a", row.bbr[0]),
                ("bbr_b", row.bbr[1]),
                ("bbr_c", row.bbr[2]),
                ("bbr_d", row.bbr[3]),
            ];
            for (field, value) in checks {
                if value <= 0.0 {
                    return Err(ParamError::NonPositive { n, field, value });
                }
            }
            if rows.insert(n, row).is_some() {
                return Err(ParamError::DuplicateN(n));
            }
        }
        if rows.is_empty() {
            return Err(schema(format!("{label}: body"), "table has no data rows".into()));
        }

        let n_ref = match meta.get("n_ref") {
            Some(v) => v.parse().map_err(|_| schema(format!("{label}: n_ref"), format!("not an integer: {v:?}")))?,
            None => 70,
        };
        if !rows.contains_key(&n_ref) {
            return Err(schema(format!("{label}: n_ref"), format!("reference row n={n_ref} missing")));
        }
        let d_er_ref_ea0 = match meta.get("d_er_ref_ea0") {
            Some(v) => Some(
                v.parse::<f64>()
                    .map_err(|_| schema(format!("{label}: d_er_ref_ea0"), format!("not a number: {v:?}")))?,
            ),
            None => None,
        };
        Ok(Self {
            rows,
            source: meta.get("source").cloned().unwrap_or_else(|| label.to_string()),
            n_ref,
            d_er_ref_ea0,
            fallback: false,
        })
    }

    pub fn with_fallback(mut self, on: bool) -> Self {
        self.fallback = on;
        self
    }

    /// Keep only the reference row, so every other n goes through the scaling laws.
    pub fn scaling_law(&self) -> Self {
        let mut rows = BTreeMap::new();
        rows.insert(self.n_ref, self.reference());
        Self {
            rows,
            source: format!("{} (scaling laws about n={})", self.source, self.n_ref),
            n_ref: self.n_ref,
            d_er_ref_ea0: self.d_er_ref_ea0,
            fallback: true,
        }
    }

    pub fn reference(&self) -> ParamRow {
        self.rows[&self.n_ref]
    }

    pub fn row(&self, n: u32) -> Option<&ParamRow> {
        self.rows.get(&n)
    }

    pub fn rows(&self) -> impl Iterator<Item = &ParamRow> {
        self.rows.values()
    }

    pub fn covers(&self, n: u32) -> bool {
        self.fallback || self.rows.contains_key(&n)
    }

    fn lookup(&self, n: u32) -> Result<Option<&ParamRow>, ParamError> {
        match self.rows.get(&n) {
            Some(r) => Ok(Some(r)),
            None if self.fallback => Ok(None),
            None => Err(ParamError::OutOfRange(n)),
        }
    }

    fn ratio(&self, n: u32) -> f64 {
        n as f64 / self.n_ref as f64
    }

    /// Relative dipole element, normalized to `n_ref`.
    pub fn d_er(&self, n: u32) -> Result<f64, ParamError> {
        let r = self.reference().d_er_rel;
        Ok(match self.lookup(n)? {
            Some(row) => row.d_er_rel / r,
            None => self.ratio(n).powf(-1.5),
        })
    }

    pub fn gamma0(&self, n: u32) -> Result<f64, ParamError> {
        Ok(match self.lookup(n)? {
            Some(row) => row.gamma0(),
            None => self.reference().gamma0() * self.ratio(n).powi(-3),
        })
    }

    pub fn gamma_bbr(&self, n: u32, theta: f64) -> Result<f64, ParamError> {
        if theta < 0.0 {
            return Err(ParamError::NegativeTemperature(theta));
        }
        Ok(match self.lookup(n)? {
            Some(row) => row.gamma_bbr(theta),
            None => {
                // constant quantum defect away from the reference row
                let r = self.reference();
                let n_eff = n as f64 - (r.n as f64 - r.n_eff);
                bbr_fit(&r.bbr, n_eff, theta)
            }
        })
    }
}

/// C6(n) in rad/us um^6.
pub fn c6_of(n: u32, table: &ParamTable) -> Result<f64, ParamError> {
    Ok(match table.lookup(n)? {
        Some(row) => mhz(row.c6_mhz_um6),
        None => mhz(table.reference().c6_mhz_um6) * table.ratio(n).powi(11),
    })
}

/// Hardware limits of the setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardwareConstraints {
    /// um
    pub dx_min: f64,
    /// W
    pub power_er: f64,
    /// Peak intensity, kW/cm^2.
    pub intensity: f64,
    /// um
    pub core_radius: f64,
    /// rad/us
    pub delta_ge: f64,
    /// Effective Rabi frequency at `n_ref`, rad/us. When absent it is
    /// computed from the intensity and the table's absolute dipole element.
    pub omega_anchor: Option<f64>,
}

impl Default for HardwareConstraints {
    fn default() -> Self {
        Self {
            dx_min: 3.0,
            power_er: 4.0,
            intensity: bessel_core_intensity(4.0, 10.0, 0.1),
            core_radius: 10.0,
            // large enough that |eps_r|^2 Gamma_e stays below 1% of Gamma_r over 50..80
            delta_ge: mhz(1.0e7),
            omega_anchor: Some(mhz(6.0)),
        }
    }
}

/// Peak intensity in kW/cm^2 of a beam putting `fraction` of `power` (W) in a core of radius `w0` (um).
pub fn bessel_core_intensity(power: f64, w0: f64, fraction: f64) -> f64 {
    let area_cm2 = std::f64::consts::PI * (w0 * 1e-4).powi(2);
    fraction * power / area_cm2 * 1e-3
}

impl HardwareConstraints {
    pub fn validate(&self) -> Result<(), ParamError> {
        let bad = |m: &str| Err(ParamError::Hardware(m.to_string()));
        if !(self.dx_min > 0.0) {
            return bad("dx_min must be positive");
        }
        if !(self.power_er > 0.0) {
            return bad("power_er must be positive");
        }
        if !(self.intensity > 0.0) {
            return bad("intensity must be positive");
        }
        if !(self.core_radius > 0.0) {
            return bad("core_radius must be positive");
        }
        if self.delta_ge == 0.0 || !self.delta_ge.is_finite() {
            return Err(ParamError::ZeroDeltaGe);
        }
        if let Some(w) = self.omega_anchor {
            if !(w > 0.0) {
                return bad("omega_anchor must be positive");
            }
        }
        Ok(())
    }

    /// Single-photon |e> -> |r> Rabi frequency at `n_ref`, rad/us.
    pub fn omega_er_ref(&self, d_ref_ea0: f64) -> f64 {
        let i_si = self.intensity * 1e7; // kW/cm^2 -> W/m^2
        let field = (2.0 * i_si / (C_LIGHT * EPS0)).sqrt();
        d_ref_ea0 * E_A0 * field / HBAR * 1e-6
    }
}

/// Effective two-photon Rabi frequency, rad/us.
pub fn rabi_of(n: u32, hw: &HardwareConstraints, table: &ParamTable) -> Result<f64, ParamError> {
    if hw.delta_ge == 0.0 {
        return Err(ParamError::ZeroDeltaGe);
    }
    let anchor = match hw.omega_anchor {
        Some(w) => w,
        None => {
            let d = table.d_er_ref_ea0.ok_or(ParamError::MissingAnchor)?;
            // Omega_ge = Omega_er
            let w = hw.omega_er_ref(d);
            w * w / (2.0 * hw.delta_ge.abs())
        }
    };
    Ok(anchor * table.d_er(n)?)
}

/// Admixture of |e> into |r>: `|eps_r|^2` and the decay rate it inherits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admixture {
    pub eps_r2: f64,
    pub gamma_e: f64,
}

/// Total Rydberg decay rate in 1/us.
pub fn decay_rate(n: u32, theta: f64, table: &ParamTable, admixture: Option<Admixture>) -> Result<f64, ParamError> {
    if theta < 0.0 {
        return Err(ParamError::NegativeTemperature(theta));
    }
    let mut g = table.gamma0(n)? + table.gamma_bbr(n, theta)?;
    if let Some(a) = admixture {
        g += a.eps_r2 * a.gamma_e;
    }
    Ok(g)
}

/// Every n- and theta-dependent quantity needed downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n: u32,
    /// rad/us um^6
    pub c6: f64,
    pub d_er: f64,
    /// rad/us
    pub omega: f64,
    /// 1/us
    pub gamma0: f64,
    /// 1/us
    pub gamma_bbr: f64,
    /// 1/us
    pub gamma_e: f64,
    pub eps_r2: f64,
    /// K
    pub theta: f64,
}

impl PhysicalParams {
    pub fn new(n: u32, theta: f64, hw: &HardwareConstraints, table: &ParamTable) -> Result<Self, ParamError> {
        hw.validate()?;
        let omega = rabi_of(n, hw, table)?;
        Ok(Self {
            n,
            c6: c6_of(n, table)?,
            d_er: table.d_er(n)?,
            omega,
            gamma0: table.gamma0(n)?,
            gamma_bbr: table.gamma_bbr(n, theta)?,
            gamma_e: GAMMA_E_5P32,
            // Omega_ge = Omega_er gives Omega_er^2 / (4 delta_ge^2) = Omega / (2 delta_ge)
            eps_r2: omega / (2.0 * hw.delta_ge.abs()),
            theta,
        })
    }

    /// Same atom at another temperature.
    pub fn at_temperature(&self, theta: f64, table: &ParamTable) -> Result<Self, ParamError> {
        Ok(Self { gamma_bbr: table.gamma_bbr(self.n, theta)?, theta, ..*self })
    }

    /// Bare `Gamma_r`, or `Gamma_r'` with the intermediate-state admixture.
    pub fn gamma(&self, admixture: bool) -> f64 {
        let g = self.gamma0 + self.gamma_bbr;
        if admixture {
            g + self.eps_r2 * self.gamma_e
        } else {
            g
        }
    }

    /// `C6 / r^6`, rad/us.
    pub fn interaction(&self, r: f64) -> f64 {
        self.c6 / r.powi(6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{to_mhz, TWO_PI};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn builtin_anchor() {
        let t = ParamTable::builtin();
        assert_eq!(t.n_ref, 70);
        let c6 = c6_of(70, &t).unwrap();
        assert!(rel(to_mhz(c6), 137_270.7) < 1e-12);
        assert!(rel(c6 / 3f64.powi(6), TWO_PI * 188.3) < 1e-9);
        for n in 50..=80 {
            assert!(t.row(n).is_some());
        }
    }

    #[test]
    fn empty_and_bad_tables() {
        assert!(matches!(ParamTable::parse("", "x"), Err(ParamError::Schema { .. })));
        let hdr = COLUMNS.join(",");
        assert!(matches!(ParamTable::parse(&hdr, "x"), Err(ParamError::Schema { .. })));
        let neg = format!("{hdr}\n70,-1,1,66.8,1.368,2.998,0.134,0.251,2.567,4.426\n");
        assert!(matches!(
            ParamTable::parse(&neg, "x"),
            Err(ParamError::NonPositive { n: 70, field: "c6_MHz_um6", .. })
        ));
        let dup = format!(
            "{hdr}\n70,1,1,66.8,1.368,2.998,0.134,0.251,2.567,4.426\n70,1,1,66.8,1.368,2.998,0.134,0.251,2.567,4.426\n"
        );
        assert!(matches!(ParamTable::parse(&dup, "x"), Err(ParamError::DuplicateN(70))));
        let wrong = "n,c6\n70,1\n";
        assert!(matches!(ParamTable::parse(wrong, "x"), Err(ParamError::Schema { .. })));
        let text = format!("{hdr}\n70,1,1,abc,1.368,2.998,0.134,0.251,2.567,4.426\n");
        match ParamTable::parse(&text, "x") {
            Err(ParamError::Schema { location, .. }) => assert!(location.contains("n_eff")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_param_table(Path::new("/nonexistent/table.csv")), Err(ParamError::Io { .. })));
    }

    #[test]
    fn out_of_range() {
        let t = ParamTable::builtin();
        assert!(matches!(c6_of(90, &t), Err(ParamError::OutOfRange(90))));
        let t = t.with_fallback(true);
        assert!(c6_of(90, &t).is_ok());
    }

    #[test]
    fn scaling_fallback() {
        let s = ParamTable::builtin().scaling_law();
        assert_eq!(c6_of(70, &s).unwrap(), c6_of(70, &ParamTable::builtin()).unwrap());
        let want = TWO_PI * 137_270.7 * (80.0f64 / 70.0).powi(11);
        assert!(rel(c6_of(80, &s).unwrap(), want) < 1e-9);
        // the independently computed table sits within 15% of the pure power law
        let tab = c6_of(80, &ParamTable::builtin()).unwrap();
        assert!(rel(tab, want) < 0.15, "{}", rel(tab, want));
        assert!(rel(s.d_er(80).unwrap(), (70.0f64 / 80.0).powf(1.5)) < 1e-12);
        let g = s.gamma0(80).unwrap() / s.gamma0(70).unwrap();
        assert!(rel(g, (70.0f64 / 80.0).powi(3)) < 1e-12);
    }

    #[test]
    fn rabi_anchor() {
        let t = ParamTable::builtin();
        let hw = HardwareConstraints { omega_anchor: Some(TWO_PI), ..Default::default() };
        assert_eq!(rabi_of(70, &hw, &t).unwrap(), TWO_PI);
        let s = t.scaling_law();
        let w = rabi_of(80, &hw, &s).unwrap();
        assert!(rel(w, TWO_PI * (70.0f64 / 80.0).powf(1.5)) < 1e-12);
        let zero = HardwareConstraints { delta_ge: 0.0, ..hw };
        assert!(matches!(rabi_of(70, &zero, &t), Err(ParamError::ZeroDeltaGe)));
        let none = HardwareConstraints { omega_anchor: None, ..hw };
        let mut t2 = t.clone();
        t2.d_er_ref_ea0 = None;
        assert!(matches!(rabi_of(70, &none, &t2), Err(ParamError::MissingAnchor)));
    }

    #[test]
    fn rabi_from_intensity() {
        // Omega_er = d E / hbar, hand-evaluated for d = 1 e a0 at 127.32 kW/cm^2
        let hw = HardwareConstraints { omega_anchor: None, delta_ge: mhz(1000.0), ..Default::default() };
        assert!(rel(hw.intensity, 127.323_954_5) < 1e-9);
        let w = hw.omega_er_ref(1.0);
        assert!(rel(w, 78_745.3) < 1e-4, "{w}");
        let t = ParamTable::builtin();
        let d = t.d_er_ref_ea0.unwrap();
        let omega = rabi_of(70, &hw, &t).unwrap();
        assert!(rel(omega, (w * d).powi(2) / (2.0 * mhz(1000.0))) < 1e-12);
    }

    #[test]
    fn decay_fixture() {
        // frozen from the lifetime-fit script in tools/
        let t = ParamTable::builtin();
        let g0 = decay_rate(70, 0.0, &t, None).unwrap();
        let g300 = decay_rate(70, 300.0, &t, None).unwrap();
        let g4 = decay_rate(70, 4.0, &t, None).unwrap();
        assert!(rel(g0, 2.465_438_400_687e-3) < 1e-9);
        assert!(rel(g4, 2.512_820_019_508e-3) < 1e-9);
        assert!(rel(g300, 6.843_750_075_190e-3) < 1e-9);
        // ~146 us at room temperature
        assert!((1.0 / g300 - 146.1).abs() < 0.5);
        assert!(matches!(decay_rate(70, -1.0, &t, None), Err(ParamError::NegativeTemperature(_))));
        let a = Admixture { eps_r2: 1e-3, gamma_e: 10.0 };
        assert!(rel(decay_rate(70, 0.0, &t, Some(a)).unwrap(), g0 + 1e-2) < 1e-12);
    }

    #[test]
    fn default_admixture_is_small() {
        let t = ParamTable::builtin();
        let hw = HardwareConstraints::default();
        for n in 50..=80 {
            let p = PhysicalParams::new(n, 0.0, &hw, &t).unwrap();
            assert!(p.eps_r2 * p.gamma_e < 0.01 * p.gamma(false), "n={n}");
        }
    }

    #[test]
    fn hardware_validation() {
        let hw = HardwareConstraints { dx_min: 0.0, ..Default::default() };
        assert!(hw.validate().is_err());
        let hw = HardwareConstraints { intensity: -1.0, ..Default::default() };
        assert!(hw.validate().is_err());
        assert!(HardwareConstraints::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn fallback_monotone(n in 30u32..120) {
            let s = ParamTable::builtin().scaling_law();
            let hw = HardwareConstraints::default();
            prop_assert!(c6_of(n + 1, &s).unwrap() > c6_of(n, &s).unwrap());
            prop_assert!(rabi_of(n + 1, &hw, &s).unwrap() < rabi_of(n, &hw, &s).unwrap());
        }

        #[test]
        fn decay_increases_with_temperature(n in 50u32..=80, t1 in 0.0f64..400.0, dt in 0.0f64..400.0) {
            let t = ParamTable::builtin();
            let a = decay_rate(n, t1, &t, None).unwrap();
            let b = decay_rate(n, t1 + dt, &t, None).unwrap();
            prop_assert!(b >= a);
        }
    }
}
