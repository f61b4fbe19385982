//! Grid sampling of the boundary `L(lambda_hat)`, the exact all-coded
//! polytope, three-way cross validation, and CSV / JSON / SVG export.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::closed_form::{all_coded_boundary, ThreeFileParams};
use crate::error::{Error, Result};
use crate::greedy::maximize_lambda_k_greedy;
use crate::lp::{self, LpMode};
use crate::numeric::{fmt_num, format_sig, ratio, to_f64, JsonNumber, Rational};
use crate::storage::{enumerate_repair_groups, StorageSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Lp,
    ClosedForm,
    Greedy,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Lp => "LP",
            Source::ClosedForm => "ClosedForm",
            Source::Greedy => "Greedy",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(Source::Lp),
            "closed" | "closedform" | "closed_form" => Ok(Source::ClosedForm),
            "greedy" => Ok(Source::Greedy),
            _ => Err(Error::InvalidParameter(format!("unknown source {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            "svg" => Ok(ExportFormat::Svg),
            _ => Err(Error::UnsupportedFormat(format!("unknown format {s:?}"))),
        }
    }
}

/// One boundary point `(lambda_hat, L(lambda_hat))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub point: Vec<Rational>,
    pub value: Rational,
    pub source: Source,
    pub case_label: Option<String>,
}

/// `normal . lambda <= offset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<Rational>,
    pub offset: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionBoundary {
    pub files: usize,
    /// `N * mu`, the plotting range of every axis.
    pub extent: Rational,
    pub samples: Vec<Sample>,
    pub halfspaces: Option<Vec<Halfspace>>,
    /// Full `K`-dimensional points.
    pub vertices: Option<Vec<Vec<Rational>>>,
}

impl RegionBoundary {
    /// Only the origin is in the region.
    pub fn is_degenerate(&self) -> bool {
        let origin_only = |p: &Vec<Rational>| p.iter().all(Zero::is_zero);
        match &self.vertices {
            Some(v) if self.samples.is_empty() => v.iter().all(origin_only),
            _ => self.samples.iter().all(|s| s.value.is_zero() && origin_only(&s.point)),
        }
    }

    pub fn max_value(&self) -> Option<&Rational> {
        self.samples.iter().map(|s| &s.value).max()
    }
}

fn check_step(step: &Rational) -> Result<()> {
    if step.is_positive() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid step must be positive, got {}", fmt_num(step))))
    }
}

/// Every point of `{0, step, 2 step, ...} ∩ [0, extent]` in `dims` dimensions,
/// in lexicographic order.
pub fn grid(dims: usize, step: &Rational, extent: &Rational) -> Result<Vec<Vec<Rational>>> {
    check_step(step)?;
    let mut axis = Vec::new();
    let mut v = Rational::zero();
    while v <= *extent {
        axis.push(v.clone());
        v += step;
    }
    let mut points = vec![Vec::new()];
    for _ in 0..dims {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(x.clone());
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

fn extent(system: &StorageSystem) -> Rational {
    lp::total_capacity_bound(system)
}

fn case_label(params: Option<&ThreeFileParams>, point: &[Rational]) -> Option<String> {
    let params = params?;
    if !params.preconditions(&point[0], &point[1]) {
        return None;
    }
    params.classify(&point[0], &point[1]).ok().map(|c| c.to_string())
}

/// Samples `L` over a grid of `lambda_hat` with the chosen method. Grid points
/// outside the region, or outside the method's reach, are left out.
pub fn sample_boundary(system: &StorageSystem, step: &Rational, source: Source, mode: LpMode) -> Result<RegionBoundary> {
    let k = system.files();
    let extent = extent(system);
    let points = grid(k - 1, step, &extent)?;
    let table = enumerate_repair_groups(system);
    let three = if k == 3 { Some(ThreeFileParams::from_system(system)?) } else { None };
    if source == Source::ClosedForm && three.is_none() && !system.is_all_coded() {
        return Err(Error::UnsupportedParameters(format!("no closed form for a mixed system with K = {k}")));
    }
    if source == Source::Greedy && k < 2 {
        return Err(Error::UnsupportedParameters("greedy needs at least two files".into()));
    }

    let mut samples = Vec::new();
    for point in points {
        let value = match source {
            Source::Lp => lp::boundary_value(system, &table, &point, mode)?,
            Source::ClosedForm if system.is_all_coded() => match all_coded_boundary(system.coded_count(), k, system.mu(), &point) {
                Ok(b) => Some(b.value),
                Err(Error::NotInRegion) => None,
                Err(e) => return Err(e),
            },
            Source::ClosedForm => {
                let params = three.as_ref().expect("three-file parameters");
                match params.boundary(&point[0], &point[1]) {
                    Ok(v) if !v.is_negative() => Some(v),
                    Ok(_) | Err(Error::UnsupportedParameters(_)) => None,
                    Err(e) => return Err(e),
                }
            }
            Source::Greedy => match maximize_lambda_k_greedy(system, &point) {
                Ok((v, _)) => Some(v),
                Err(Error::NotInRegion | Error::UnsupportedParameters(_)) => None,
                Err(e) => return Err(e),
            },
        };
        if let Some(value) = value {
            let case_label = case_label(three.as_ref(), &point);
            samples.push(Sample { point, value, source, case_label });
        }
    }
    Ok(RegionBoundary { files: k, extent, samples, halfspaces: None, vertices: None })
}

/// `{lambda >= 0, sum(lambda) <= C/K mu}`, or the origin when `C <= K - 1`.
pub fn all_coded_polytope(coded: usize, files: usize, mu: &Rational) -> Result<RegionBoundary> {
    if files == 0 {
        return Err(Error::InvalidSystem("no files".into()));
    }
    if !mu.is_positive() {
        return Err(Error::InvalidParameter(format!("service rate must be positive, got {mu}")));
    }
    let unit = |i: usize, v: Rational| {
        let mut e = vec![Rational::zero(); files];
        e[i] = v;
        e
    };
    let degenerate = coded < files;
    let capacity = if degenerate { Rational::zero() } else { ratio(coded as i64, files as i64) * mu };
    let mut halfspaces: Vec<Halfspace> =
        (0..files).map(|i| Halfspace { normal: unit(i, ratio(-1, 1)), offset: Rational::zero() }).collect();
    halfspaces.push(Halfspace { normal: vec![ratio(1, 1); files], offset: capacity.clone() });
    let mut vertices = vec![vec![Rational::zero(); files]];
    if !degenerate {
        vertices.extend((0..files).map(|i| unit(i, capacity.clone())));
    }
    Ok(RegionBoundary {
        files,
        extent: ratio(coded as i64, 1) * mu,
        samples: Vec::new(),
        halfspaces: Some(halfspaces),
        vertices: Some(vertices),
    })
}

/// Vertices of the two-file region `{(x, y): 0 <= y <= L(x)}` spanned by
/// the samples, counter-clockwise from the origin, collinear points dropped.
pub fn polygon_2d(region: &RegionBoundary) -> Vec<[Rational; 2]> {
    let mut points: Vec<[Rational; 2]> = Vec::new();
    if region.samples.is_empty() {
        if let Some(v) = &region.vertices {
            points.extend(v.iter().filter(|p| p.len() == 2).map(|p| [p[0].clone(), p[1].clone()]));
        }
    }
    for s in region.samples.iter().filter(|s| s.point.len() == 1) {
        points.push([s.point[0].clone(), Rational::zero()]);
        points.push([s.point[0].clone(), s.value.clone()]);
    }
    convex_hull(points)
}

fn cross(o: &[Rational; 2], a: &[Rational; 2], b: &[Rational; 2]) -> Rational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Monotone-chain hull, counter-clockwise from the lowest-leftmost point.
pub fn convex_hull(mut points: Vec<[Rational; 2]>) -> Vec<[Rational; 2]> {
    points.sort();
    points.dedup();
    if points.len() < 3 {
        return points;
    }
    let mut hull: Vec<[Rational; 2]> = Vec::with_capacity(points.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[Rational; 2]>> =
            if pass == 0 { Box::new(points.iter()) } else { Box::new(points.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p).is_positive() {
                hull.pop();
            }
            hull.push(p.clone());
        }
        hull.pop();
    }
    hull
}

/// LP, closed-form and greedy values at one grid point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationPoint {
    pub point: Vec<Rational>,
    pub case_label: Option<String>,
    pub lp: Option<Rational>,
    pub closed_form: Option<Rational>,
    pub greedy: Option<Rational>,
}

impl ValidationPoint {
    pub fn values(&self) -> [(Source, Option<&Rational>); 3] {
        [(Source::Lp, self.lp.as_ref()), (Source::ClosedForm, self.closed_form.as_ref()), (Source::Greedy, self.greedy.as_ref())]
    }

    /// Largest pairwise gap among the values present.
    pub fn discrepancy(&self) -> Rational {
        let present: Vec<&Rational> = self.values().into_iter().filter_map(|(_, v)| v).collect();
        let hi = present.iter().max();
        let lo = present.iter().min();
        match (hi, lo) {
            (Some(hi), Some(lo)) => *hi - *lo,
            _ => Rational::zero(),
        }
    }

    /// Some method found no value while another did, or values differ.
    pub fn agrees(&self) -> bool {
        let present = self.values().iter().filter(|(_, v)| v.is_some()).count();
        (present == 0 || present == 3) && self.discrepancy().is_zero()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossValidation {
    pub points: Vec<ValidationPoint>,
    pub max_discrepancy: Rational,
}

impl CrossValidation {
    pub fn mismatches(&self) -> impl Iterator<Item = &ValidationPoint> {
        self.points.iter().filter(|p| !p.agrees())
    }

    pub fn is_consistent(&self) -> bool {
        self.mismatches().next().is_none()
    }

    pub fn case_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.points {
            *counts.entry(p.case_label.clone().unwrap_or_default()).or_insert(0) += 1;
        }
        counts
    }
}

fn show(v: Option<&Rational>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "-".into())
}

impl fmt::Display for CrossValidation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "points: {}", self.points.len())?;
        for (case, n) in self.case_counts() {
            writeln!(f, "{}: {n}", if case.is_empty() { "unlabelled" } else { &case })?;
        }
        writeln!(f, "max discrepancy: {}", fmt_num(&self.max_discrepancy))?;
        let bad: Vec<_> = self.mismatches().collect();
        writeln!(f, "mismatches: {}", bad.len())?;
        for p in bad {
            let point: Vec<String> = p.point.iter().map(fmt_num).collect();
            writeln!(
                f,
                "  ({}) {} lp={} closed={} greedy={}",
                point.join(", "),
                p.case_label.as_deref().unwrap_or("-"),
                show(p.lp.as_ref()),
                show(p.closed_form.as_ref()),
                show(p.greedy.as_ref())
            )?;
        }
        Ok(())
    }
}

/// Compares the three methods on every grid point where the three-file
/// formula's hypotheses hold.
pub fn cross_validate(system: &StorageSystem, step: &Rational, mode: LpMode) -> Result<CrossValidation> {
    let params = ThreeFileParams::from_system(system)?;
    let table = enumerate_repair_groups(system);
    let mut points = Vec::new();
    let mut max_discrepancy = Rational::zero();
    for point in grid(2, step, &extent(system))? {
        if !params.preconditions(&point[0], &point[1]) {
            continue;
        }
        let lp = lp::boundary_value(system, &table, &point, mode)?;
        let closed_form = Some(params.boundary(&point[0], &point[1])?);
        let greedy = maximize_lambda_k_greedy(system, &point).ok().map(|(v, _)| v);
        let p = ValidationPoint { case_label: case_label(Some(&params), &point), point, lp, closed_form, greedy };
        let gap = p.discrepancy();
        if gap > max_discrepancy {
            max_discrepancy = gap;
        }
        points.push(p);
    }
    Ok(CrossValidation { points, max_discrepancy })
}

#[derive(Serialize)]
struct JsonSample {
    point: Vec<JsonNumber>,
    #[serde(rename = "L")]
    value: JsonNumber,
    source: String,
    case_label: Option<String>,
}

#[derive(Serialize)]
struct JsonHalfspace {
    normal: Vec<JsonNumber>,
    offset: JsonNumber,
}

#[derive(Serialize)]
struct JsonRegion {
    #[serde(rename = "K")]
    files: usize,
    extent: JsonNumber,
    degenerate: bool,
    samples: Vec<JsonSample>,
    halfspaces: Option<Vec<JsonHalfspace>>,
    vertices: Option<Vec<Vec<JsonNumber>>>,
}

fn nums(values: &[Rational]) -> Vec<JsonNumber> {
    values.iter().cloned().map(JsonNumber).collect()
}

fn to_json(region: &RegionBoundary) -> String {
    let doc = JsonRegion {
        files: region.files,
        extent: JsonNumber(region.extent.clone()),
        degenerate: region.is_degenerate(),
        samples: region
            .samples
            .iter()
            .map(|s| JsonSample {
                point: nums(&s.point),
                value: JsonNumber(s.value.clone()),
                source: s.source.to_string(),
                case_label: s.case_label.clone(),
            })
            .collect(),
        halfspaces: region
            .halfspaces
            .as_ref()
            .map(|hs| hs.iter().map(|h| JsonHalfspace { normal: nums(&h.normal), offset: JsonNumber(h.offset.clone()) }).collect()),
        vertices: region.vertices.as_ref().map(|vs| vs.iter().map(|v| nums(v)).collect()),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("region serializes");
    text.push('\n');
    text
}

fn to_csv(region: &RegionBoundary) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (1..region.files).map(|i| format!("lambda_{i}")).collect();
    header.extend(["L", "source", "case_label"].map(String::from));
    let _ = writeln!(out, "{}", header.join(","));
    for s in &region.samples {
        let mut row: Vec<String> = s.point.iter().map(fmt_num).collect();
        row.push(fmt_num(&s.value));
        row.push(s.source.to_string());
        row.push(s.case_label.clone().unwrap_or_default());
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

const SIZE: f64 = 600.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Canvas {
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(extent: &Rational) -> Self {
        let extent = to_f64(extent);
        let scale = if extent > 0.0 { (SIZE - 2.0 * MARGIN) / extent } else { 1.0 };
        Self { scale, body: String::new() }
    }

    fn px(&self, x: &Rational, y: &Rational) -> (String, String) {
        let sx = MARGIN + to_f64(x) * self.scale;
        let sy = SIZE - MARGIN - to_f64(y) * self.scale;
        (format_sig(sx, 12), format_sig(sy, 12))
    }

    fn points(&self, pts: &[[Rational; 2]]) -> String {
        pts.iter()
            .map(|[x, y]| {
                let (a, b) = self.px(x, y);
                format!("{a},{b}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn axes(&mut self, extent: &Rational, x_label: &str, y_label: &str) {
        let zero = Rational::zero();
        let (ox, oy) = self.px(&zero, &zero);
        let (ex, _) = self.px(extent, &zero);
        let (_, ey) = self.px(&zero, extent);
        let _ = writeln!(self.body, r#"<line x1="{ox}" y1="{oy}" x2="{ex}" y2="{oy}" stroke="black"/>"#);
        let _ = writeln!(self.body, r#"<line x1="{ox}" y1="{oy}" x2="{ox}" y2="{ey}" stroke="black"/>"#);
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="16" text-anchor="middle">{x_label}</text>"#,
            SIZE / 2.0,
            SIZE - MARGIN / 3.0
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" font-size="16" text-anchor="middle" transform="rotate(-90 {} {})">{y_label}</text>"#,
            MARGIN / 3.0,
            SIZE / 2.0,
            MARGIN / 3.0,
            SIZE / 2.0
        );
        let _ = writeln!(
            self.body,
            r#"<text x="{ex}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
            format_sig(SIZE - MARGIN + 16.0, 12),
            fmt_num(extent)
        );
    }

    fn annotate(&mut self, x: &Rational, y: &Rational, text: &str) {
        let (a, b) = self.px(x, y);
        let _ = writeln!(self.body, r#"<text x="{a}" y="{b}" dx="4" dy="-4" font-size="12">{text}</text>"#);
    }

    fn finish(self) -> String {
        format!(
            concat!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n",
                "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n",
                "{}</svg>\n"
            ),
            self.body
        )
    }
}

fn intercepts(canvas: &mut Canvas, polygon: &[[Rational; 2]]) {
    let zero = Rational::zero();
    if let Some(x) = polygon.iter().filter(|p| p[1].is_zero()).map(|p| &p[0]).max() {
        if x.is_positive() {
            canvas.annotate(x, &zero, &fmt_num(x));
        }
    }
    if let Some(y) = polygon.iter().filter(|p| p[0].is_zero()).map(|p| &p[1]).max() {
        if y.is_positive() {
            canvas.annotate(&zero, y, &fmt_num(y));
        }
    }
}

fn origin_only(canvas: &mut Canvas) {
    let zero = Rational::zero();
    let (a, b) = canvas.px(&zero, &zero);
    let _ = writeln!(canvas.body, r#"<circle cx="{a}" cy="{b}" r="4" fill="{}"/>"#, PALETTE[0]);
}

fn to_svg(region: &RegionBoundary) -> Result<String> {
    let k = region.files;
    if k > 3 {
        return Err(Error::UnsupportedFormat(format!("svg export supports K <= 3, got K = {k}")));
    }
    let mut canvas = Canvas::new(&region.extent);
    match k {
        1 | 2 => {
            let (x_label, y_label) = if k == 2 { ("λ1", "λ2") } else { ("λ1", "") };
            canvas.axes(&region.extent, x_label, y_label);
            let polygon = if k == 2 {
                polygon_2d(region)
            } else {
                let top = region.max_value().cloned().unwrap_or_default();
                vec![[Rational::zero(), Rational::zero()], [top, Rational::zero()]]
            };
            if region.is_degenerate() || polygon.len() < 2 {
                origin_only(&mut canvas);
            } else {
                let _ = writeln!(
                    canvas.body,
                    r#"<polygon points="{}" fill="{}" fill-opacity="0.35" stroke="{}" stroke-width="2"/>"#,
                    canvas.points(&polygon),
                    PALETTE[0],
                    PALETTE[0]
                );
                intercepts(&mut canvas, &polygon);
            }
        }
        _ => {
            canvas.axes(&region.extent, "λ2", "λ3");
            let mut slices: BTreeMap<&Rational, Vec<[Rational; 2]>> = BTreeMap::new();
            for s in &region.samples {
                slices.entry(&s.point[0]).or_default().push([s.point[1].clone(), s.value.clone()]);
            }
            if region.samples.is_empty() {
                if let Some(vs) = &region.vertices {
                    let face: Vec<[Rational; 2]> = vs.iter().filter(|v| v[0].is_zero()).map(|v| [v[1].clone(), v[2].clone()]).collect();
                    let face = convex_hull(face);
                    if face.len() >= 3 {
                        let _ = writeln!(
                            canvas.body,
                            r#"<polygon points="{}" fill="{}" fill-opacity="0.35" stroke="{}"/>"#,
                            canvas.points(&face),
                            PALETTE[0],
                            PALETTE[0]
                        );
                        intercepts(&mut canvas, &face);
                    }
                }
            }
            if region.is_degenerate() {
                origin_only(&mut canvas);
            } else {
                for (i, (l1, line)) in slices.into_iter().enumerate() {
                    let color = PALETTE[i % PALETTE.len()];
                    let _ = writeln!(
                        canvas.body,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                        canvas.points(&line)
                    );
                    let _ = writeln!(
                        canvas.body,
                        r#"<text x="{}" y="{}" font-size="12" fill="{color}">λ1 = {}</text>"#,
                        format_sig(SIZE - MARGIN - 80.0, 12),
                        format_sig(MARGIN + 14.0 * i as f64, 12),
                        fmt_num(l1)
                    );
                }
            }
        }
    }
    Ok(canvas.finish())
}

/// Renders `region` to text in `format`.
pub fn render(region: &RegionBoundary, format: ExportFormat) -> Result<String> {
    match format {
        ExportFormat::Csv => Ok(to_csv(region)),
        ExportFormat::Json => Ok(to_json(region)),
        ExportFormat::Svg => to_svg(region),
    }
}

pub fn export(region: &RegionBoundary, format: ExportFormat, path: &Path) -> Result<()> {
    let text = render(region, format)?;
    std::fs::write(path, text)?;
    Ok(())
}
