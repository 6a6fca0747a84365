//! Text formats: MOTChallenge rows, tensor sidecars, warp files, plot data
//! and the flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::appearance::{
    Embedding, FeatureMap, FusionMode, KeypointHeatmaps, Tensor3, NUM_KEYPOINTS,
};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::metrics::{TrackRow, TrackTable};
use crate::motion::SpeedFilter;
use crate::simulation::{Simulation, Suite};
use crate::tracker::{AppearanceInput, Detection, TrackerConfig, Tracklet, WarpMatrix};

/// Fields per MOTChallenge line.
pub const MOT_FIELDS: usize = 10;

/// Score written for interpolated result rows, which have no detection.
pub const INTERPOLATED_CONF: f64 = -1.0;

/// One MOTChallenge line. `id` is `-1` for detections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotRow {
    pub frame: u32,
    pub id: i64,
    pub bbox: BoundingBox<f64>,
    pub conf: f64,
    pub extra: [f64; 3],
}

impl MotRow {
    pub fn new(frame: u32, id: i64, bbox: BoundingBox<f64>, conf: f64) -> Self {
        Self {
            frame,
            id,
            bbox,
            conf,
            extra: [-1.0; 3],
        }
    }

    /// Canonical form: integers for frame and id, two decimals for the box
    /// and score, shortest round-trip form for the trailing fields.
    pub fn to_line(&self) -> String {
        let b = &self.bbox;
        format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.2},{},{},{}",
            self.frame,
            self.id,
            b.x,
            b.y,
            b.w,
            b.h,
            self.conf,
            self.extra[0],
            self.extra[1],
            self.extra[2]
        )
    }
}

fn field<T: FromStr>(raw: &str, name: &str, line: usize) -> Result<T> {
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{name} `{}` is not a valid number", raw.trim()),
    })
}

fn finite(v: f64, name: &str, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            line,
            msg: format!("{name} must be finite"),
        })
    }
}

/// Parses MOTChallenge text. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn parse_mot(text: &str) -> Result<Vec<MotRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != MOT_FIELDS {
            return Err(Error::Parse {
                line,
                msg: format!(
                    "expected {MOT_FIELDS} comma-separated fields, found {}",
                    f.len()
                ),
            });
        }
        let frame: u32 = field(f[0], "frame", line)?;
        if frame == 0 {
            return Err(Error::Parse {
                line,
                msg: "frame numbers start at 1".into(),
            });
        }
        let id: i64 = field(f[1], "id", line)?;
        let mut nums = [0.0; 8];
        for (k, name) in ["x", "y", "w", "h", "conf", "x3d", "y3d", "z3d"]
            .iter()
            .enumerate()
        {
            nums[k] = finite(field(f[k + 2], name, line)?, name, line)?;
        }
        let bbox =
            BoundingBox::new(nums[0], nums[1], nums[2], nums[3]).map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
        rows.push(MotRow {
            frame,
            id,
            bbox,
            conf: nums[4],
            extra: [nums[5], nums[6], nums[7]],
        });
    }
    Ok(rows)
}

pub fn write_mot(rows: &[MotRow]) -> String {
    let mut out = String::with_capacity(rows.len() * 48);
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Ground truth: rows flagged `conf == 0` are ignore regions and dropped.
pub fn gt_table(rows: &[MotRow]) -> Result<TrackTable> {
    TrackTable::new(
        rows.iter()
            .filter(|r| r.conf != 0.0)
            .map(|r| TrackRow {
                frame: r.frame,
                id: r.id,
                bbox: r.bbox,
            })
            .collect(),
    )
}

/// Tracker output: every row counts.
pub fn result_table(rows: &[MotRow]) -> Result<TrackTable> {
    TrackTable::new(
        rows.iter()
            .map(|r| TrackRow {
                frame: r.frame,
                id: r.id,
                bbox: r.bbox,
            })
            .collect(),
    )
}

/// Result rows for final (interpolated) track histories, sorted by frame
/// then id; observed rows carry score 1.
pub fn result_rows(tracks: &[Tracklet<f64>]) -> Vec<MotRow> {
    let mut rows: Vec<MotRow> = tracks
        .iter()
        .flat_map(|t| {
            t.history.iter().map(move |h| {
                MotRow::new(
                    h.frame,
                    t.id as i64,
                    h.bbox,
                    if h.observed { 1.0 } else { INTERPOLATED_CONF },
                )
            })
        })
        .collect();
    rows.sort_by_key(|r| (r.frame, r.id));
    rows
}

/// Dense `H × W × C` tensor as read from or written to a sidecar.
pub type SidecarTensor = Tensor3<f64>;

/// Appends one block: a `H W C` header line, then one line of `C` values per
/// spatial cell in row-major order.
pub fn write_tensor(out: &mut String, t: &SidecarTensor) {
    let (h, w, c) = t.dims();
    let _ = writeln!(out, "{h} {w} {c}");
    for cell in t.values().chunks(c) {
        let line: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

/// Reads consecutive tensor blocks. Values may be spread over any number of
/// lines; each header must sit on its own line.
pub fn parse_tensors(text: &str) -> Result<Vec<SidecarTensor>> {
    let mut out = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    while let Some((i, header)) = lines.next() {
        let line = i + 1;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad tensor header `{header}`"),
                })
            })
            .collect::<Result<_>>()?;
        let [h, w, c] = dims[..] else {
            return Err(Error::Parse {
                line,
                msg: format!("tensor header needs `H W C`, got `{header}`"),
            });
        };
        let need = h * w * c;
        let mut data = Vec::with_capacity(need);
        let mut last = line;
        while data.len() < need {
            let Some((j, l)) = lines.next() else {
                return Err(Error::Parse {
                    line: last,
                    msg: format!("tensor truncated: {} of {need} values", data.len()),
                });
            };
            last = j + 1;
            for tok in l.split_whitespace() {
                data.push(finite(
                    field(tok, "tensor value", last)?,
                    "tensor value",
                    last,
                )?);
            }
        }
        if data.len() != need {
            return Err(Error::Parse {
                line: last,
                msg: format!("tensor block has {} values, header says {need}", data.len()),
            });
        }
        out.push(Tensor3::new(h, w, c, data).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Line `n` holds the six entries of the warp from frame `n` to `n + 1`.
pub fn parse_warps(text: &str) -> Result<Vec<WarpMatrix<f64>>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = raw
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                field::<f64>(t, "warp entry", line).and_then(|x| finite(x, "warp entry", line))
            })
            .collect::<Result<_>>()?;
        if v.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("warp line needs 6 values, found {}", v.len()),
            });
        }
        let m = [[v[0], v[1], v[2]], [v[3], v[4], v[5]]];
        out.push(WarpMatrix::new(m).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Optional per-row sidecars accompanying a detection file, each holding
/// one tensor block per detection row in file order.
#[derive(Debug, Clone, Default)]
pub struct Sidecars {
    pub embeddings: Option<Vec<SidecarTensor>>,
    pub features: Option<Vec<SidecarTensor>>,
    pub heatmaps: Option<Vec<SidecarTensor>>,
}

/// Groups detection rows by frame, attaching sidecar data by row index.
/// Keypoint confidences are taken as the peak of each heatmap channel.
pub fn detections_by_frame(
    rows: &[MotRow],
    sidecars: &Sidecars,
) -> Result<BTreeMap<u32, Vec<Detection<f64>>>> {
    let check = |name: &str, v: &Option<Vec<SidecarTensor>>| match v {
        Some(t) if t.len() != rows.len() => Err(Error::DimensionMismatch(format!(
            "{name} sidecar has {} blocks for {} detections",
            t.len(),
            rows.len()
        ))),
        _ => Ok(()),
    };
    check("embedding", &sidecars.embeddings)?;
    check("feature", &sidecars.features)?;
    check("heatmap", &sidecars.heatmaps)?;
    if sidecars.features.is_some() != sidecars.heatmaps.is_some() {
        return Err(Error::DimensionMismatch(
            "feature and heatmap sidecars must be given together".into(),
        ));
    }
    let mut out: BTreeMap<u32, Vec<Detection<f64>>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        if r.id != -1 {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("detection rows need id -1, found {}", r.id),
            });
        }
        let mut det = Detection::new(r.bbox, r.conf);
        if let Some(e) = &sidecars.embeddings {
            det.embedding = Some(Embedding(e[i].values().to_vec()));
        }
        if let (Some(f), Some(h)) = (&sidecars.features, &sidecars.heatmaps) {
            let (fh, fw, _) = f[i].dims();
            let (hh, hw, hc) = h[i].dims();
            if (fh, fw) != (hh, hw) || hc != NUM_KEYPOINTS {
                return Err(Error::DimensionMismatch(format!(
                    "detection {}: feature map {fh}x{fw} vs heatmaps {hh}x{hw}x{hc}",
                    i + 1
                )));
            }
            det.appearance = Some(AppearanceInput {
                features: FeatureMap(f[i].clone()),
                heatmaps: KeypointHeatmaps::from_peaks(h[i].clone())?,
            });
        }
        out.entry(r.frame).or_default().push(det);
    }
    Ok(out)
}

/// Everything `simulate` writes, as file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationFiles {
    pub gt: String,
    pub det: String,
    pub embeddings: String,
    /// Per detection: visible fraction followed by the six part visibilities.
    pub visibility: String,
    pub features: Option<String>,
    pub heatmaps: Option<String>,
}

pub fn simulation_files(sim: &Simulation) -> SimulationFiles {
    let mut gt = Vec::new();
    let mut det = Vec::new();
    let mut embeddings = String::new();
    let mut visibility = String::new();
    let pixels = sim.spec.feature_maps.is_some();
    let mut features = String::new();
    let mut heatmaps = String::new();
    for f in &sim.frames {
        for (a, b) in &f.gt {
            gt.push(MotRow::new(f.frame, *a as i64 + 1, *b, 1.0));
        }
        for d in &f.detections {
            det.push(MotRow::new(f.frame, -1, d.bbox, d.score));
            let e = &d.embedding;
            write_tensor(
                &mut embeddings,
                &Tensor3::new(1, 1, e.len(), e.clone()).expect("non-empty latent"),
            );
            let mut v = vec![d.visibility];
            v.extend_from_slice(&d.part_visibility);
            write_tensor(
                &mut visibility,
                &Tensor3::new(1, 1, v.len(), v).expect("seven entries"),
            );
            if let Some(a) = &d.appearance {
                write_tensor(&mut features, &a.features.0);
                write_tensor(&mut heatmaps, &a.heatmaps.maps);
            }
        }
    }
    SimulationFiles {
        gt: write_mot(&gt),
        det: write_mot(&det),
        embeddings,
        visibility,
        features: pixels.then_some(features),
        heatmaps: pixels.then_some(heatmaps),
    }
}

/// `id,frame,cx,cy,w,h,observed` per row, grouped by track then frame.
pub fn plot_rows(rows: &[MotRow]) -> String {
    let mut sorted: Vec<&MotRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.id, r.frame));
    let mut out = String::from("id,frame,cx,cy,w,h,observed\n");
    for r in sorted {
        let c = r.bbox.to_center();
        let _ = writeln!(
            out,
            "{},{},{:.2},{:.2},{:.2},{:.2},{}",
            r.id,
            r.frame,
            c.cx,
            c.cy,
            c.w,
            c.h,
            u8::from(r.conf > 0.0)
        );
    }
    out
}

/// Tracker parameters plus paths, scenario and ablation toggles.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerConfig<f64>,
    /// Occlusion-aware thresholds for lost tracks; off forces a zero offset.
    pub odm: bool,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub scenario: Option<Suite>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            odm: true,
            input: None,
            output: None,
            scenario: None,
            seed: 0,
        }
    }
}

const CONFIG_KEYS: [&str; 25] = [
    "det_threshold",
    "new_track_threshold",
    "alpha0",
    "speed_threshold",
    "iou_threshold",
    "occlusion_offset",
    "embedding_threshold",
    "ema_beta",
    "buffer_span",
    "max_lost",
    "filter",
    "ams",
    "odm",
    "appearance",
    "fusion",
    "part_threshold",
    "stage1_gate",
    "stage2_gate",
    "max_interp_gap",
    "input",
    "output",
    "scenario",
    "seed",
    // accepted spellings of the same switches
    "theta_v",
    "theta_det",
];

fn parse_bool(v: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Parse {
            line,
            msg: format!("expected true or false, got `{v}`"),
        }),
    }
}

impl RunConfig {
    /// Tracker parameters with the toggles applied.
    pub fn effective_tracker(&self) -> TrackerConfig<f64> {
        let mut t = self.tracker.clone();
        if !self.odm {
            t.occlusion_offset = 0.0;
        }
        t
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment;
    /// unknown or repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !CONFIG_KEYS.contains(&k) {
                return Err(Error::Parse {
                    line,
                    msg: format!("unknown key `{k}`"),
                });
            }
            let canonical = match k {
                "theta_v" => "speed_threshold",
                "theta_det" => "det_threshold",
                other => other,
            };
            if !seen.insert(canonical) {
                return Err(Error::Parse {
                    line,
                    msg: format!("key `{k}` given twice"),
                });
            }
            cfg.set(canonical, v, line)?;
        }
        cfg.tracker.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, line: usize) -> Result<()> {
        let t = &mut self.tracker;
        let num = |name: &str| field::<f64>(v, name, line).and_then(|x| finite(x, name, line));
        match key {
            "det_threshold" => t.det_threshold = num(key)?,
            "new_track_threshold" => t.new_track_threshold = num(key)?,
            "alpha0" => t.alpha0 = num(key)?,
            "speed_threshold" => t.speed_threshold = num(key)?,
            "iou_threshold" => t.iou_threshold = num(key)?,
            "occlusion_offset" => t.occlusion_offset = num(key)?,
            "embedding_threshold" => t.embedding_threshold = num(key)?,
            "ema_beta" => t.ema_beta = num(key)?,
            "part_threshold" => t.part_threshold = num(key)?,
            "stage1_gate" => t.stage1_gate = num(key)?,
            "stage2_gate" => t.stage2_gate = num(key)?,
            "buffer_span" => t.buffer_span = field(v, key, line)?,
            "max_lost" => t.max_lost = field(v, key, line)?,
            "max_interp_gap" => t.max_interp_gap = field(v, key, line)?,
            "filter" => {
                t.filter = SpeedFilter::parse(v).ok_or_else(|| Error::Parse {
                    line,
                    msg: format!("unknown filter `{v}` (mean, gaussian, laplacian)"),
                })?
            }
            "fusion" => {
                t.fusion = match v {
                    "adaptive" => FusionMode::Adaptive,
                    "global" => FusionMode::Global,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            msg: format!("unknown fusion `{v}` (adaptive, global)"),
                        })
                    }
                }
            }
            "ams" => t.ams = parse_bool(v, line)?,
            "appearance" => t.appearance = parse_bool(v, line)?,
            "odm" => self.odm = parse_bool(v, line)?,
            "input" => self.input = Some(PathBuf::from(v)),
            "output" => self.output = Some(PathBuf::from(v)),
            "scenario" => {
                self.scenario = Some(Suite::parse(v).map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })?)
            }
            "seed" => self.seed = field(v, key, line)?,
            _ => unreachable!("keys are checked against CONFIG_KEYS"),
        }
        Ok(())
    }

    /// Every key in a fixed order; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let t = &self.tracker;
        let fusion = match t.fusion {
            FusionMode::Adaptive => "adaptive",
            FusionMode::Global => "global",
        };
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("det_threshold", t.det_threshold.to_string());
        kv("new_track_threshold", t.new_track_threshold.to_string());
        kv("alpha0", t.alpha0.to_string());
        kv("speed_threshold", t.speed_threshold.to_string());
        kv("iou_threshold", t.iou_threshold.to_string());
        kv("occlusion_offset", t.occlusion_offset.to_string());
        kv("embedding_threshold", t.embedding_threshold.to_string());
        kv("ema_beta", t.ema_beta.to_string());
        kv("buffer_span", t.buffer_span.to_string());
        kv("max_lost", t.max_lost.to_string());
        kv("filter", t.filter.name().to_string());
        kv("ams", t.ams.to_string());
        kv("odm", self.odm.to_string());
        kv("appearance", t.appearance.to_string());
        kv("fusion", fusion.to_string());
        kv("part_threshold", t.part_threshold.to_string());
        kv("stage1_gate", t.stage1_gate.to_string());
        kv("stage2_gate", t.stage2_gate.to_string());
        kv("max_interp_gap", t.max_interp_gap.to_string());
        if let Some(p) = &self.input {
            kv("input", p.display().to_string());
        }
        if let Some(p) = &self.output {
            kv("output", p.display().to_string());
        }
        if let Some(s) = self.scenario {
            kv("scenario", s.name().to_string());
        }
        kv("seed", self.seed.to_string());
        out
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{generate, standard_suite};
    use proptest::prelude::*;

    fn bb(x: f64, y: f64, w: f64, h: f64) -> BoundingBox<f64> {
        BoundingBox::new(x, y, w, h).unwrap()
    }

    #[test]
    fn parses_a_detection_line() {
        let rows = parse_mot("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        assert_eq!(
            rows,
            vec![MotRow::new(1, -1, bb(10.0, 20.0, 30.0, 40.0), 0.9)]
        );
        let dets = detections_by_frame(&rows, &Sidecars::default()).unwrap();
        assert_eq!(dets[&1][0].bbox, bb(10.0, 20.0, 30.0, 40.0));
        assert_eq!(dets[&1][0].score, 0.9);
    }

    #[test]
    fn rejects_malformed_lines_with_line_numbers() {
        let text = "1,-1,10,20,30,40,0.9,-1,-1,-1\n2,-1,10,20,30,40,0.9,-1,-1\n";
        assert!(matches!(parse_mot(text), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(
            parse_mot("1,-1,10,abc,30,40,0.9,-1,-1,-1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mot("0,-1,10,20,30,40,0.9,-1,-1,-1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mot("\n1,-1,10,20,0,40,0.9,-1,-1,-1"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_mot("1,-1,10,20,30,40,NaN,-1,-1,-1"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = "1,-1,10.00,20.00,30.00,40.00,0.90,-1,-1,-1\n1,3,-4.25,0.50,12.75,30.00,1.00,1,0.83,-1\n";
        assert_eq!(write_mot(&parse_mot(text).unwrap()), text);
    }

    #[test]
    fn gt_drops_ignored_rows() {
        let rows = parse_mot("1,1,0,0,10,10,1,-1,-1,-1\n1,2,0,0,10,10,0,-1,-1,-1\n").unwrap();
        assert_eq!(gt_table(&rows).unwrap().ids(), vec![1]);
        assert_eq!(result_table(&rows).unwrap().ids(), vec![1, 2]);
    }

    #[test]
    fn tensor_blocks_round_trip() {
        let a = Tensor3::new(2, 1, 3, vec![0.1, -2.0, 3.5e-7, 4.0, 5.0, 6.25]).unwrap();
        let b = Tensor3::new(1, 1, 2, vec![1.0 / 3.0, 0.0]).unwrap();
        let mut text = String::new();
        write_tensor(&mut text, &a);
        write_tensor(&mut text, &b);
        assert!(text.starts_with("2 1 3\n0.1 -2 0.00000035\n"));
        assert_eq!(parse_tensors(&text).unwrap(), vec![a, b]);
        // values may wrap across lines
        assert_eq!(
            parse_tensors("1 2 2\n1 2\n3\n4\n").unwrap()[0].values(),
            &[1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn tensor_errors() {
        assert!(matches!(
            parse_tensors("1 2\n1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_tensors("1 1 3\n1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_tensors("1 1 2\n1 2 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_tensors("1 1 2\n1 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn sidecar_counts_must_match_rows() {
        let rows = parse_mot("1,-1,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        let sc = Sidecars {
            embeddings: Some(vec![]),
            ..Default::default()
        };
        assert!(detections_by_frame(&rows, &sc).is_err());
        let one = Tensor3::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let sc = Sidecars {
            embeddings: Some(vec![one]),
            ..Default::default()
        };
        assert_eq!(
            detections_by_frame(&rows, &sc).unwrap()[&1][0].embedding,
            Some(Embedding(vec![1.0, 0.0]))
        );
        let tracked = parse_mot("1,4,10,20,30,40,0.9,-1,-1,-1\n").unwrap();
        assert!(detections_by_frame(&tracked, &Sidecars::default()).is_err());
    }

    #[test]
    fn warp_lines() {
        let w = parse_warps("1 0 5 0 1 -2\n1,0,0,0,1,0\n").unwrap();
        assert_eq!(w[0], WarpMatrix::translation(5.0, -2.0));
        assert!(w[1].is_identity());
        assert!(matches!(
            parse_warps("1 0 5 0 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn config_parses_and_rejects_typos() {
        let cfg = RunConfig::parse(
            "# ablation\nalpha0 = 0.5\nodm=false\nfilter = gaussian\nscenario = linger\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.tracker.alpha0, 0.5);
        assert_eq!(cfg.tracker.filter, SpeedFilter::Gaussian);
        assert_eq!(cfg.scenario, Some(Suite::Linger));
        assert_eq!(cfg.effective_tracker().occlusion_offset, 0.0);
        assert_eq!(cfg.tracker.occlusion_offset, 0.2);
        assert!(matches!(
            RunConfig::parse("\nalpah0 = 0.5"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("alpha0 = 0.5\nalpha0 = 0.4"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("ams = maybe"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("alpha0 = 1.5"),
            Err(Error::InvalidConfig(_))
        ));
        assert!(RunConfig::parse("theta_v = 0.3\nspeed_threshold = 0.3").is_err());
    }

    #[test]
    fn config_save_load_is_a_fixed_point() {
        let mut cfg = RunConfig::parse(
            "alpha0 = 0.1\nfusion = global\noutput = out/res.txt\nscenario = crowd",
        )
        .unwrap();
        cfg.tracker.embedding_threshold = 0.1 + 0.2;
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), text);
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn simulation_export_lines_up_with_detections() {
        let mut spec = standard_suite(Suite::Cross, 2);
        spec.feature_maps = Some(Default::default());
        spec.duration = 12;
        let sim = generate(&spec).unwrap();
        let files = simulation_files(&sim);
        let det = parse_mot(&files.det).unwrap();
        let n: usize = sim.frames.iter().map(|f| f.detections.len()).sum();
        assert_eq!(det.len(), n);
        assert_eq!(parse_tensors(&files.embeddings).unwrap().len(), n);
        assert_eq!(
            parse_tensors(&files.visibility).unwrap()[0].dims(),
            (1, 1, 7)
        );
        let sc = Sidecars {
            embeddings: Some(parse_tensors(&files.embeddings).unwrap()),
            features: Some(parse_tensors(files.features.as_ref().unwrap()).unwrap()),
            heatmaps: Some(parse_tensors(files.heatmaps.as_ref().unwrap()).unwrap()),
        };
        let by_frame = detections_by_frame(&det, &sc).unwrap();
        let first = &sim.frames[0].detections[0];
        let read = &by_frame[&1][0];
        assert_eq!(read.embedding.as_ref().unwrap().0, first.embedding);
        assert_eq!(read.appearance.as_ref(), first.appearance.as_ref());
        assert_eq!(
            gt_table(&parse_mot(&files.gt).unwrap()).unwrap().len(),
            sim.gt_table().len()
        );
    }

    #[test]
    fn plot_rows_group_by_track() {
        let rows = vec![
            MotRow::new(2, 1, bb(0.0, 0.0, 10.0, 20.0), 1.0),
            MotRow::new(1, 2, bb(0.0, 0.0, 10.0, 20.0), 1.0),
            MotRow::new(1, 1, bb(10.0, 0.0, 10.0, 20.0), INTERPOLATED_CONF),
        ];
        let text = plot_rows(&rows);
        assert_eq!(
            text,
            "id,frame,cx,cy,w,h,observed\n1,1,15.00,10.00,10.00,20.00,0\n1,2,5.00,10.00,10.00,20.00,1\n2,1,5.00,10.00,10.00,20.00,1\n"
        );
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(read_text(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(
            read_text(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
        assert!(write_atomic(&dir.path().join("no/such/dir.txt"), "x").is_err());
    }

    proptest! {
        #[test]
        fn rows_round_trip_at_two_decimals(
            frame in 1u32..5000, id in -1i64..1000,
            x in -50_000i64..50_000, y in -50_000i64..50_000, w in 1i64..50_000, h in 1i64..50_000, c in 0i64..=100,
        ) {
            let q = |v: i64| v as f64 / 100.0;
            let row = MotRow::new(frame, id, bb(q(x), q(y), q(w), q(h)), q(c));
            let text = write_mot(&[row]);
            let back = parse_mot(&text).unwrap();
            prop_assert_eq!(write_mot(&back), text);
            prop_assert!((back[0].bbox.x - row.bbox.x).abs() < 1e-9);
            prop_assert_eq!(back[0].frame, frame);
            prop_assert_eq!(back[0].id, id);
        }
    }
}
