//! Raw observations, gap filling, the Cartesian state decomposition and
//! empirical percentile thresholds.
//!
//! The state vector at time `t` is
//! `(P, P sin D, P cos D, W, W sin D, W cos D)` with pressure `P` in hPa,
//! speed `W` in m/s and direction `D` in degrees (radians internally).

use std::fmt;
use std::path::Path;

use chrono::{DateTime, Datelike, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Spacing of the observation grid.
pub const STEP_MINUTES: i64 = 10;

/// Default cap on the fraction of interpolated cells per channel.
pub const DEFAULT_MAX_GAP_FRACTION: f64 = 0.05;

pub const CSV_HEADER: [&str; 4] = ["timestamp", "direction_deg", "speed_ms", "pressure_hpa"];

/// One of the six state components, in state-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    P,
    Ps,
    Pc,
    W,
    Ws,
    Wc,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::P,
        Component::Ps,
        Component::Pc,
        Component::W,
        Component::Ws,
        Component::Wc,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Component {
        Component::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::P => "p",
            Component::Ps => "p_s",
            Component::Pc => "p_c",
            Component::W => "w",
            Component::Ws => "w_s",
            Component::Wc => "w_c",
        }
    }

    pub fn is_pressure(self) -> bool {
        self.index() < 3
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type StateVector = [f64; 6];

/// Builds a state vector from pressure, speed and direction (degrees).
pub fn state_from_polar(pressure: f64, speed: f64, direction_deg: f64) -> StateVector {
    let (s, c) = direction_deg.to_radians().sin_cos();
    [pressure, pressure * s, pressure * c, speed, speed * s, speed * c]
}

/// Angle of the Cartesian pair `(sin-part, cos-part)` in degrees, mapped to
/// `[0, 360)`. `None` when both parts are zero.
pub fn direction_deg(sin_part: f64, cos_part: f64) -> Option<f64> {
    if sin_part == 0.0 && cos_part == 0.0 {
        return None;
    }
    let mut d = sin_part.atan2(cos_part).to_degrees();
    if d < 0.0 {
        d += 360.0;
    }
    if d >= 360.0 {
        d -= 360.0;
    }
    Some(d)
}

/// Aligned ten-minute observations of direction, speed and pressure.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFrame {
    timestamps: Vec<DateTime<FixedOffset>>,
    direction: Vec<Option<f64>>,
    speed: Vec<Option<f64>>,
    pressure: Vec<Option<f64>>,
    /// Per-cell missing flags (direction, speed, pressure) as first observed.
    missing_mask: Vec<[bool; 3]>,
}

impl ObservationFrame {
    pub fn new(
        timestamps: Vec<DateTime<FixedOffset>>,
        direction: Vec<Option<f64>>,
        speed: Vec<Option<f64>>,
        pressure: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if direction.len() != n || speed.len() != n || pressure.len() != n {
            return Err(Error::Config(
                "observation channels differ in length".to_string(),
            ));
        }
        for i in 1..n {
            let dt = timestamps[i] - timestamps[i - 1];
            if dt.num_seconds() != STEP_MINUTES * 60 {
                return Err(Error::IrregularTimestamps { row: i });
            }
        }
        for i in 0..n {
            if let Some(d) = direction[i] {
                if !(0.0..=360.0).contains(&d) {
                    return Err(Error::Parse {
                        row: i,
                        message: format!("direction {d} outside [0, 360]"),
                    });
                }
            }
            if let Some(w) = speed[i] {
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::Parse {
                        row: i,
                        message: format!("speed {w} is negative or not finite"),
                    });
                }
            }
            if let Some(p) = pressure[i] {
                if !(p > 0.0) || !p.is_finite() {
                    return Err(Error::Parse {
                        row: i,
                        message: format!("pressure {p} is not positive"),
                    });
                }
            }
        }
        let missing_mask = (0..n)
            .map(|i| [direction[i].is_none(), speed[i].is_none(), pressure[i].is_none()])
            .collect();
        Ok(ObservationFrame {
            timestamps,
            direction,
            speed,
            pressure,
            missing_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[DateTime<FixedOffset>] {
        &self.timestamps
    }

    pub fn direction(&self) -> &[Option<f64>] {
        &self.direction
    }

    pub fn speed(&self) -> &[Option<f64>] {
        &self.speed
    }

    pub fn pressure(&self) -> &[Option<f64>] {
        &self.pressure
    }

    pub fn missing_mask(&self) -> &[[bool; 3]] {
        &self.missing_mask
    }

    /// True when no cell is currently missing.
    pub fn is_complete(&self) -> bool {
        self.direction.iter().all(Option::is_some)
            && self.speed.iter().all(Option::is_some)
            && self.pressure.iter().all(Option::is_some)
    }

    /// Fraction of cells flagged missing in the original observations,
    /// i.e. the fraction filled by interpolation once the frame is complete.
    pub fn interpolated_fraction(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let flagged: usize = self
            .missing_mask
            .iter()
            .map(|m| m.iter().filter(|&&b| b).count())
            .sum();
        flagged as f64 / (3 * self.len()) as f64
    }

    /// Index of the row whose timestamp equals `ts`.
    pub fn position_of(&self, ts: &DateTime<FixedOffset>) -> Option<usize> {
        let first = self.timestamps.first()?;
        let diff = (*ts - *first).num_minutes();
        if diff < 0 || diff % STEP_MINUTES != 0 {
            return None;
        }
        let i = (diff / STEP_MINUTES) as usize;
        (i < self.len()).then_some(i)
    }

    /// Number of ten-minute steps between January 1st 00:00 (local clock of
    /// the first timestamp) and the first row. Used to phase the periodic bases.
    pub fn start_index(&self) -> i64 {
        let Some(first) = self.timestamps.first() else {
            return 0;
        };
        let local = first.naive_local();
        let jan1 = NaiveDate::from_ymd_opt(local.year(), 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("January 1st exists");
        (local - jan1).num_minutes().div_euclid(STEP_MINUTES)
    }
}

/// Fills interior gaps by linear interpolation between the nearest observed
/// neighbours. Direction is interpolated on its unit-vector components and
/// re-projected, so a gap between 350° and 10° is filled near 0°.
pub fn interpolate_gaps(frame: &ObservationFrame, max_gap_fraction: f64) -> Result<ObservationFrame> {
    let n = frame.len();
    check_channel(&frame.direction, "direction_deg", max_gap_fraction)?;
    check_channel(&frame.speed, "speed_ms", max_gap_fraction)?;
    check_channel(&frame.pressure, "pressure_hpa", max_gap_fraction)?;

    let speed = fill_linear(&frame.speed);
    let pressure = fill_linear(&frame.pressure);

    let sin: Vec<Option<f64>> = frame
        .direction
        .iter()
        .map(|d| d.map(|d| d.to_radians().sin()))
        .collect();
    let cos: Vec<Option<f64>> = frame
        .direction
        .iter()
        .map(|d| d.map(|d| d.to_radians().cos()))
        .collect();
    let sin = fill_linear(&sin);
    let cos = fill_linear(&cos);
    let direction = (0..n)
        .map(|i| match frame.direction[i] {
            Some(d) => Some(d),
            // exactly opposite neighbours leave no preferred angle; keep the left one
            None => Some(direction_deg(sin[i].unwrap(), cos[i].unwrap()).unwrap_or_else(|| {
                previous_observed(&frame.direction, i).unwrap_or(0.0)
            })),
        })
        .collect();

    Ok(ObservationFrame {
        timestamps: frame.timestamps.clone(),
        direction,
        speed,
        pressure,
        missing_mask: frame.missing_mask.clone(),
    })
}

fn previous_observed(values: &[Option<f64>], i: usize) -> Option<f64> {
    values[..i].iter().rev().find_map(|v| *v)
}

fn check_channel(values: &[Option<f64>], column: &'static str, cap: f64) -> Result<()> {
    if values.is_empty() {
        return Ok(());
    }
    if values[0].is_none() {
        return Err(Error::UnfillableGap {
            column,
            position: "start",
        });
    }
    if values[values.len() - 1].is_none() {
        return Err(Error::UnfillableGap {
            column,
            position: "end",
        });
    }
    let missing = values.iter().filter(|v| v.is_none()).count();
    let fraction = missing as f64 / values.len() as f64;
    if fraction > cap {
        return Err(Error::DataQuality {
            column,
            fraction,
            cap,
        });
    }
    Ok(())
}

/// Linear interpolation across interior `None` runs; ends must be present.
fn fill_linear(values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = values.to_vec();
    let mut last_known: Option<usize> = None;
    for i in 0..values.len() {
        if let Some(v) = values[i] {
            if let Some(k) = last_known {
                if i > k + 1 {
                    let left = values[k].unwrap();
                    let span = (i - k) as f64;
                    for (j, slot) in out.iter_mut().enumerate().take(i).skip(k + 1) {
                        let w = (j - k) as f64 / span;
                        *slot = Some(left + w * (v - left));
                    }
                }
            }
            last_known = Some(i);
        }
    }
    out
}

/// The `T x 6` history of state vectors together with the absolute time
/// index of its first row (ten-minute steps since January 1st 00:00).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMatrix {
    start_index: i64,
    rows: Vec<StateVector>,
}

impl StateMatrix {
    pub fn new(start_index: i64, rows: Vec<StateVector>) -> Self {
        StateMatrix { start_index, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn start_index(&self) -> i64 {
        self.start_index
    }

    pub fn rows(&self) -> &[StateVector] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &StateVector {
        &self.rows[t]
    }

    /// Absolute time index of row `t`.
    pub fn time_index(&self, t: usize) -> i64 {
        self.start_index + t as i64
    }

    pub fn column(&self, c: Component) -> Vec<f64> {
        self.rows.iter().map(|r| r[c.index()]).collect()
    }

    /// Rows `range`, keeping the absolute time alignment.
    pub fn slice(&self, range: std::ops::Range<usize>) -> StateMatrix {
        StateMatrix {
            start_index: self.start_index + range.start as i64,
            rows: self.rows[range].to_vec(),
        }
    }

    /// Rows `0..=t`, the information set at origin `t`.
    pub fn history_through(&self, t: usize) -> StateMatrix {
        self.slice(0..t + 1)
    }

    /// Wind direction implied by row `t`, `None` when the wind vector is zero.
    pub fn wind_direction(&self, t: usize) -> Option<f64> {
        let r = &self.rows[t];
        direction_deg(r[Component::Ws.index()], r[Component::Wc.index()])
    }

    pub fn direction_undefined(&self, t: usize) -> bool {
        self.wind_direction(t).is_none()
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|v| v.is_finite()))
    }
}

/// Cartesian decomposition of a gap-free frame into the six-dimensional state.
pub fn decompose(frame: &ObservationFrame) -> Result<StateMatrix> {
    if !frame.is_complete() {
        return Err(Error::Config(
            "frame still has missing cells; interpolate gaps first".to_string(),
        ));
    }
    let rows = (0..frame.len())
        .map(|i| {
            state_from_polar(
                frame.pressure[i].unwrap(),
                frame.speed[i].unwrap(),
                frame.direction[i].unwrap(),
            )
        })
        .collect();
    Ok(StateMatrix::new(frame.start_index(), rows))
}

/// Per-component empirical percentiles `c_alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    alphas: Vec<f64>,
    /// `values[a][m]` is the `alphas[a]` percentile of component `m`.
    values: Vec<StateVector>,
}

impl ThresholdSet {
    pub fn new(alphas: Vec<f64>, values: Vec<StateVector>) -> Result<Self> {
        validate_alphas(&alphas)?;
        if values.len() != alphas.len() {
            return Err(Error::Config(
                "threshold values do not match the alpha levels".to_string(),
            ));
        }
        Ok(ThresholdSet { alphas, values })
    }

    /// An empty set, for models without threshold regressors.
    pub fn empty() -> Self {
        ThresholdSet {
            alphas: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn value(&self, alpha_index: usize, component: usize) -> f64 {
        self.values[alpha_index][component]
    }

    pub fn values(&self) -> &[StateVector] {
        &self.values
    }
}

pub(crate) fn validate_alphas(alphas: &[f64]) -> Result<()> {
    if alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
        return Err(Error::Config("percentile levels must lie in (0, 1)".to_string()));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "percentile levels must be strictly increasing".to_string(),
        ));
    }
    Ok(())
}

/// Component-wise empirical percentiles (type-7 convention, see
/// [`quantile_sorted`]).
pub fn empirical_thresholds(states: &StateMatrix, alphas: &[f64]) -> Result<ThresholdSet> {
    if alphas.is_empty() {
        return Err(Error::Config("no percentile levels given".to_string()));
    }
    validate_alphas(alphas)?;
    if states.is_empty() {
        return Err(Error::InsufficientData {
            required: 1,
            available: 0,
        });
    }
    let mut values = vec![[0.0; 6]; alphas.len()];
    for c in Component::ALL {
        let mut col = states.column(c);
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalInput("state matrix"));
        }
        col.sort_by(f64::total_cmp);
        for (a, &alpha) in alphas.iter().enumerate() {
            values[a][c.index()] = quantile_sorted(&col, alpha);
        }
    }
    ThresholdSet::new(alphas.to_vec(), values)
}

/// Reads the ingestion CSV (`timestamp,direction_deg,speed_ms,pressure_hpa`).
/// Empty fields are missing values.
pub fn read_observations(path: &Path) -> Result<ObservationFrame> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_observations_from(file)
}

pub fn read_observations_from<R: std::io::Read>(reader: R) -> Result<ObservationFrame> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Csv(format!(
            "expected header `{}`, found `{}`",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut timestamps = Vec::new();
    let mut direction = Vec::new();
    let mut speed = Vec::new();
    let mut pressure = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let ts = DateTime::parse_from_rfc3339(&record[0]).map_err(|e| Error::Parse {
            row,
            message: format!("bad timestamp `{}`: {e}", &record[0]),
        })?;
        timestamps.push(ts);
        direction.push(parse_cell(&record[1], row)?);
        speed.push(parse_cell(&record[2], row)?);
        pressure.push(parse_cell(&record[3], row)?);
    }
    ObservationFrame::new(timestamps, direction, speed, pressure)
}

fn parse_cell(field: &str, row: usize) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| Error::Parse {
            row,
            message: format!("bad number `{field}`: {e}"),
        })
}

pub fn write_observations(frame: &ObservationFrame, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_observations_to(frame, file)
}

pub fn write_observations_to<W: std::io::Write>(frame: &ObservationFrame, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for i in 0..frame.len() {
        wtr.write_record([
            frame.timestamps[i].to_rfc3339(),
            cell(frame.direction[i]),
            cell(frame.speed[i]),
            cell(frame.pressure[i]),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Regular timestamps starting at `start`.
pub fn regular_timestamps(start: DateTime<FixedOffset>, n: usize) -> Vec<DateTime<FixedOffset>> {
    (0..n)
        .map(|i| start + chrono::Duration::minutes(STEP_MINUTES * i as i64))
        .collect()
}
