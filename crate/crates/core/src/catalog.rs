//! Trajectory and billboard ingestion, slot ground set, exposure matrix.
//!
//! Time is integer seconds and every interval is half-open `[start, end)`. A
//! user is exposed to a slot when one of their trajectory tuples sits at the
//! billboard's location and overlaps the slot window by a positive length.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRAJECTORY_HEADER: [&str; 4] = ["user_id", "loc", "t_start", "t_end"];
pub const BILLBOARD_HEADER: [&str; 4] = ["billboard_id", "loc", "cost", "panel_size"];
pub const PROBS_HEADER: [&str; 3] = ["slot_id", "user_id", "prob"];

/// Dense index of a slot in its catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SlotId(pub u32);

impl SlotId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Half-open time interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: i64,
    pub end: i64,
}

impl Window {
    pub fn new(start: i64, end: i64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> i64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// True when the intersection has positive length. Touching endpoints do not overlap.
    pub fn overlaps(&self, other: &Window) -> bool {
        self.start.max(other.start) < self.end.min(other.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryTuple {
    pub user_id: String,
    pub loc: String,
    pub t_start: i64,
    pub t_end: i64,
}

impl TrajectoryTuple {
    pub fn window(&self) -> Window {
        Window::new(self.t_start, self.t_end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillboardRecord {
    pub billboard_id: String,
    pub loc: String,
    pub cost: f64,
    pub panel_size: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub slot_id: SlotId,
    /// Index into [`SlotCatalog::billboards`].
    pub billboard: usize,
    pub billboard_id: String,
    pub window: Window,
}

/// Ground set of (billboard, window) slots, ordered by billboard then time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotCatalog {
    pub billboards: Vec<BillboardRecord>,
    pub slots: Vec<Slot>,
    pub horizon: Window,
    pub delta: i64,
}

/// One non-zero influence probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exposure {
    pub user: u32,
    pub prob: f64,
}

/// Sparse `Pr(slot, user)`, stored per slot with ascending user index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureMatrix {
    users: Vec<String>,
    rows: Vec<Vec<Exposure>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbRecord {
    pub slot_id: u32,
    pub user_id: String,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbabilityModel {
    /// `panel_size / max panel_size` for every exposed user.
    PanelRatio,
    /// Side-loaded probabilities; must cover every exposed pair.
    Explicit(Vec<ProbRecord>),
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(path, e))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Header {
            path: path.to_path_buf(),
            expected: expected.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(reader)
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    if let csv::ErrorKind::Io(_) = err.kind() {
        let csv::ErrorKind::Io(io) = err.into_kind() else {
            unreachable!()
        };
        return Error::io(path, io);
    }
    Error::Row {
        path: path.to_path_buf(),
        line,
        reason: err.to_string(),
    }
}

/// Deserializes every data row, passing the 1-based file line of each row.
fn read_rows<T, F>(path: &Path, expected: &[&str], mut visit: F) -> Result<()>
where
    T: serde::de::DeserializeOwned,
    F: FnMut(T, u64) -> Result<()>,
{
    let mut reader = open_csv(path, expected)?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let mut record = csv::StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => return Ok(()),
            Ok(true) => {}
            Err(e) => return Err(csv_error(path, e)),
        }
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| row_error(path, line, e.to_string()))?;
        visit(row, line)?;
    }
}

fn row_error(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Row {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads `user_id,loc,t_start,t_end`. Rows with `t_start >= t_end` are rejected.
pub fn load_trajectories(path: impl AsRef<Path>) -> Result<Vec<TrajectoryTuple>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    read_rows(path, &TRAJECTORY_HEADER, |tuple: TrajectoryTuple, line| {
        if tuple.user_id.is_empty() || tuple.loc.is_empty() {
            return Err(row_error(path, line, "empty user_id or loc"));
        }
        if tuple.t_start >= tuple.t_end {
            return Err(row_error(
                path,
                line,
                format!(
                    "t_start {} is not before t_end {}",
                    tuple.t_start, tuple.t_end
                ),
            ));
        }
        out.push(tuple);
        Ok(())
    })?;
    Ok(out)
}

/// Reads `billboard_id,loc,cost,panel_size`, enforcing unique ids and positive panels.
pub fn load_billboards(path: impl AsRef<Path>) -> Result<Vec<BillboardRecord>> {
    let path = path.as_ref();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    read_rows(path, &BILLBOARD_HEADER, |record: BillboardRecord, line| {
        if record.billboard_id.is_empty() || record.loc.is_empty() {
            return Err(row_error(path, line, "empty billboard_id or loc"));
        }
        if !(record.panel_size.is_finite() && record.panel_size > 0.0) {
            return Err(row_error(
                path,
                line,
                format!("panel_size must be positive, got {}", record.panel_size),
            ));
        }
        if !(record.cost.is_finite() && record.cost >= 0.0) {
            return Err(row_error(
                path,
                line,
                format!("cost must be non-negative, got {}", record.cost),
            ));
        }
        if !seen.insert(record.billboard_id.clone()) {
            return Err(Error::DuplicateBillboard {
                id: record.billboard_id,
                line,
            });
        }
        out.push(record);
        Ok(())
    })?;
    Ok(out)
}

/// Reads `slot_id,user_id,prob` for the explicit probability model.
pub fn load_probabilities(path: impl AsRef<Path>) -> Result<Vec<ProbRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    read_rows(path, &PROBS_HEADER, |record: ProbRecord, line| {
        if !(record.prob > 0.0 && record.prob <= 1.0) {
            return Err(row_error(
                path,
                line,
                format!("prob must lie in (0, 1], got {}", record.prob),
            ));
        }
        out.push(record);
        Ok(())
    })?;
    Ok(out)
}

pub fn write_trajectories(path: impl AsRef<Path>, tuples: &[TrajectoryTuple]) -> Result<()> {
    write_rows(path.as_ref(), tuples)
}

pub fn write_billboards(path: impl AsRef<Path>, records: &[BillboardRecord]) -> Result<()> {
    write_rows(path.as_ref(), records)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Splits every billboard's horizon into windows of `delta` seconds.
pub fn build_catalog(
    billboards: &[BillboardRecord],
    horizon: Window,
    delta: i64,
) -> Result<SlotCatalog> {
    if delta <= 0 {
        return Err(Error::Horizon(format!(
            "slot length must be positive, got {delta}"
        )));
    }
    if horizon.is_empty() {
        return Err(Error::Horizon(format!(
            "[{}, {}) is empty",
            horizon.start, horizon.end
        )));
    }
    if horizon.len() % delta != 0 {
        return Err(Error::Horizon(format!(
            "length {} is not divisible by slot length {delta}",
            horizon.len()
        )));
    }
    let windows = horizon.len() / delta;
    let total = billboards.len() as u64 * windows as u64;
    if total > u32::MAX as u64 {
        return Err(Error::Horizon(format!("{total} slots exceed the id space")));
    }

    let mut slots = Vec::with_capacity(total as usize);
    for (b, record) in billboards.iter().enumerate() {
        for w in 0..windows {
            let start = horizon.start + w * delta;
            slots.push(Slot {
                slot_id: SlotId(slots.len() as u32),
                billboard: b,
                billboard_id: record.billboard_id.clone(),
                window: Window::new(start, start + delta),
            });
        }
    }
    Ok(SlotCatalog {
        billboards: billboards.to_vec(),
        slots,
        horizon,
        delta,
    })
}

impl SlotCatalog {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn windows_per_billboard(&self) -> usize {
        (self.horizon.len() / self.delta) as usize
    }

    pub fn slot(&self, id: SlotId) -> Option<&Slot> {
        self.slots.get(id.index())
    }

    pub fn all_ids(&self) -> Vec<SlotId> {
        (0..self.slots.len() as u32).map(SlotId).collect()
    }

    /// Billboard indices grouped by location.
    pub fn billboards_by_loc(&self) -> HashMap<&str, Vec<usize>> {
        let mut map: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, b) in self.billboards.iter().enumerate() {
            map.entry(b.loc.as_str()).or_default().push(i);
        }
        map
    }

    /// Windows of one billboard that overlap `window`, as slot ids.
    pub fn overlapping_slots(
        &self,
        billboard: usize,
        window: Window,
    ) -> impl Iterator<Item = SlotId> {
        let per = self.windows_per_billboard() as i64;
        let lo = window.start.max(self.horizon.start);
        let hi = window.end.min(self.horizon.end);
        let (first, last) = if lo < hi {
            let first = (lo - self.horizon.start) / self.delta;
            // ceil((hi - T1) / delta), exclusive
            let last = (hi - self.horizon.start + self.delta - 1) / self.delta;
            (first, last)
        } else {
            (0, 0)
        };
        let base = billboard as i64 * per;
        (first..last).map(move |w| SlotId((base + w) as u32))
    }

    /// Slots a trajectory tuple is exposed to: same location, positive overlap.
    pub fn exposed_slots<'a>(
        &'a self,
        by_loc: &'a HashMap<&str, Vec<usize>>,
        tuple: &'a TrajectoryTuple,
    ) -> impl Iterator<Item = SlotId> + 'a {
        by_loc
            .get(tuple.loc.as_str())
            .into_iter()
            .flatten()
            .flat_map(move |&b| self.overlapping_slots(b, tuple.window()))
    }

    fn max_panel(&self) -> f64 {
        self.billboards
            .iter()
            .map(|b| b.panel_size)
            .fold(0.0, f64::max)
    }
}

/// Builds `Pr(slot, user)` for every exposed pair. Repeated exposures of a
/// user to one slot collapse into a single entry.
pub fn build_exposure(
    catalog: &SlotCatalog,
    trajectories: &[TrajectoryTuple],
    model: &ProbabilityModel,
) -> Result<ExposureMatrix> {
    let users: Vec<String> = trajectories
        .iter()
        .map(|t| t.user_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let user_index: HashMap<&str, u32> = users
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i as u32))
        .collect();

    let by_loc = catalog.billboards_by_loc();
    let mut pairs: Vec<Vec<u32>> = vec![Vec::new(); catalog.len()];
    for tuple in trajectories {
        let u = user_index[tuple.user_id.as_str()];
        for slot in catalog.exposed_slots(&by_loc, tuple) {
            pairs[slot.index()].push(u);
        }
    }
    for row in &mut pairs {
        row.sort_unstable();
        row.dedup();
    }

    let rows = match model {
        ProbabilityModel::PanelRatio => {
            let max_panel = catalog.max_panel();
            pairs
                .into_iter()
                .enumerate()
                .map(|(s, row)| {
                    let panel = catalog.billboards[catalog.slots[s].billboard].panel_size;
                    let prob = panel / max_panel;
                    row.into_iter()
                        .map(|user| Exposure { user, prob })
                        .collect()
                })
                .collect()
        }
        ProbabilityModel::Explicit(records) => {
            let mut explicit: BTreeMap<(u32, &str), f64> = BTreeMap::new();
            for r in records {
                if !(r.prob > 0.0 && r.prob <= 1.0) {
                    return Err(Error::ProbabilityOutOfRange {
                        slot: SlotId(r.slot_id),
                        user: r.user_id.clone(),
                        prob: r.prob,
                    });
                }
                if r.slot_id as usize >= catalog.len() {
                    return Err(Error::UnknownSlot(SlotId(r.slot_id)));
                }
                explicit.insert((r.slot_id, r.user_id.as_str()), r.prob);
            }
            let mut rows = Vec::with_capacity(pairs.len());
            for (s, row) in pairs.into_iter().enumerate() {
                let mut out = Vec::with_capacity(row.len());
                for user in row {
                    let name = users[user as usize].as_str();
                    let prob = *explicit.get(&(s as u32, name)).ok_or_else(|| {
                        Error::MissingProbability {
                            slot: SlotId(s as u32),
                            user: name.to_owned(),
                        }
                    })?;
                    out.push(Exposure { user, prob });
                }
                rows.push(out);
            }
            rows
        }
    };

    Ok(ExposureMatrix { users, rows })
}

impl ExposureMatrix {
    /// Builds a matrix directly from `(slot, user, prob)` triples.
    /// Duplicate pairs keep the last probability.
    pub fn from_entries(
        num_slots: usize,
        num_users: usize,
        entries: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let mut rows: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); num_slots];
        for (slot, user, prob) in entries {
            if slot as usize >= num_slots {
                return Err(Error::UnknownSlot(SlotId(slot)));
            }
            if user as usize >= num_users || !(prob > 0.0 && prob <= 1.0) {
                return Err(Error::ProbabilityOutOfRange {
                    slot: SlotId(slot),
                    user: format!("#{user}"),
                    prob,
                });
            }
            rows[slot as usize].insert(user, prob);
        }
        Ok(Self {
            users: (0..num_users).map(|u| format!("u{u}")).collect(),
            rows: rows
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .map(|(user, prob)| Exposure { user, prob })
                        .collect()
                })
                .collect(),
        })
    }

    pub fn num_slots(&self) -> usize {
        self.rows.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn num_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Exposures of one slot, ascending by user. Panics on an out-of-range id.
    #[inline]
    pub fn row(&self, slot: SlotId) -> &[Exposure] {
        &self.rows[slot.index()]
    }

    pub fn contains(&self, slot: SlotId) -> bool {
        slot.index() < self.rows.len()
    }

    pub fn check(&self, slot: SlotId) -> Result<()> {
        if self.contains(slot) {
            Ok(())
        } else {
            Err(Error::UnknownSlot(slot))
        }
    }

    pub fn prob(&self, slot: SlotId, user: u32) -> f64 {
        let row = self.row(slot);
        row.binary_search_by_key(&user, |e| e.user)
            .map(|i| row[i].prob)
            .unwrap_or(0.0)
    }
}
