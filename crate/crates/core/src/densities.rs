//! Input densities: truncated normalized Gaussians, mixtures, uniform slabs,
//! grayscale images (PGM P2/P5) and CSV matrices, plus feasible initial paths.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellField, Grid, SpatialField, SpatialGrid, TimeGrid};

/// One Gaussian bump. `mean` has one entry per dimension (grid coordinates in
/// [0, 1]); `variance` is either a single shared value or one per dimension.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityKind {
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
    Mixture { components: Vec<GaussianComponent> },
    Uniform,
    Image { path: PathBuf },
    Csv { path: PathBuf },
}

/// Recipe for one input density. `scale` multiplies the unit-mass generator,
/// so for Gaussians and mixtures the discrete mass equals `scale` (times the
/// weight sum) exactly at any resolution.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DensitySpec {
    #[serde(flatten)]
    pub kind: DensityKind,
    #[serde(default = "one")]
    pub scale: f64,
}

impl DensitySpec {
    pub fn gaussian(mean: Vec<f64>, variance: Vec<f64>, scale: f64) -> Self {
        DensitySpec {
            kind: DensityKind::Gaussian { mean, variance },
            scale,
        }
    }

    pub fn mixture(components: Vec<GaussianComponent>, scale: f64) -> Self {
        DensitySpec {
            kind: DensityKind::Mixture { components },
            scale,
        }
    }

    pub fn uniform(scale: f64) -> Self {
        DensitySpec {
            kind: DensityKind::Uniform,
            scale,
        }
    }

    pub fn validate(&self, dims: u8) -> Result<()> {
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(Error::config("scale", "must be finite and >= 0"));
        }
        let check_component = |mean: &[f64], variance: &[f64], weight: f64| -> Result<()> {
            if mean.len() != dims as usize {
                return Err(Error::config(
                    "mean",
                    format!("has {} entries for a {dims}D grid", mean.len()),
                ));
            }
            if mean.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
                return Err(Error::config("mean", "components must lie in [0, 1]"));
            }
            if variance.len() != 1 && variance.len() != dims as usize {
                return Err(Error::config(
                    "variance",
                    format!("has {} entries; expected 1 or {dims}", variance.len()),
                ));
            }
            if variance.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(Error::config("variance", "entries must be > 0"));
            }
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(Error::config("weight", "must be finite and >= 0"));
            }
            Ok(())
        };
        match &self.kind {
            DensityKind::Gaussian { mean, variance } => check_component(mean, variance, 1.0),
            DensityKind::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::config("components", "mixture is empty"));
                }
                for c in components {
                    check_component(&c.mean, &c.variance, c.weight)?;
                }
                Ok(())
            }
            DensityKind::Uniform => Ok(()),
            DensityKind::Image { path } | DensityKind::Csv { path } => {
                if !path.exists() {
                    return Err(Error::config(
                        "path",
                        format!("{} does not exist", path.display()),
                    ));
                }
                Ok(())
            }
        }
    }
}

fn variance_along(variance: &[f64], axis: usize) -> f64 {
    if variance.len() == 1 {
        variance[0]
    } else {
        variance[axis]
    }
}

/// Unnormalized Gaussian bump evaluated at cell centers. The sign in the
/// exponent is the decaying one; a density is a bump, not a well.
fn gaussian_raw(space: &SpatialGrid, mean: &[f64], variance: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; space.n_cells()];
    let vx = variance_along(variance, 0);
    for j in 0..space.n_y() {
        for i in 0..space.n_x() {
            let mut e = (space.x_center(i) - mean[0]).powi(2) / (2.0 * vx);
            if space.dims() == 2 {
                let vy = variance_along(variance, 1);
                e += (space.y_center(j) - mean[1]).powi(2) / (2.0 * vy);
            }
            out[space.cell_index(i, j)] = (-e).exp();
        }
    }
    out
}

/// Normalize a nonnegative slice to unit discrete mass on the grid.
fn normalized(mut values: Vec<f64>, space: &SpatialGrid) -> Result<Vec<f64>> {
    let mass: f64 = values.iter().sum::<f64>() * space.cell_measure();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::config(
            "density",
            "generator has zero discrete mass on this grid",
        ));
    }
    for v in values.iter_mut() {
        *v /= mass;
    }
    Ok(values)
}

/// Build the density described by `spec` on `space`. Gaussian components are
/// normalized to unit discrete mass before weighting, so the result integrates
/// to `scale` (Gaussian/uniform) or `scale * sum of weights` (mixture).
pub fn make_density(spec: &DensitySpec, space: &SpatialGrid) -> Result<SpatialField> {
    spec.validate(space.dims())?;
    let values = match &spec.kind {
        DensityKind::Gaussian { mean, variance } => {
            let mut v = normalized(gaussian_raw(space, mean, variance), space)?;
            for x in v.iter_mut() {
                *x *= spec.scale;
            }
            v
        }
        DensityKind::Mixture { components } => {
            let mut acc = vec![0.0; space.n_cells()];
            for c in components {
                let comp = normalized(gaussian_raw(space, &c.mean, &c.variance), space)?;
                for (a, v) in acc.iter_mut().zip(comp) {
                    *a += c.weight * v;
                }
            }
            for x in acc.iter_mut() {
                *x *= spec.scale;
            }
            acc
        }
        DensityKind::Uniform => vec![spec.scale; space.n_cells()],
        DensityKind::Image { path } | DensityKind::Csv { path } => {
            return load_grayscale(path, space, spec.scale);
        }
    };
    SpatialField::from_values(space, values)
}

/// Load a grayscale matrix (PGM P2/P5 or CSV, chosen by content) and resample
/// it to the grid with nearest neighbors. PGM pixels map linearly from
/// [0, maxval] to [0, scale]; CSV entries must be nonnegative and are
/// multiplied by `scale` directly.
pub fn load_grayscale(path: &Path, space: &SpatialGrid, scale: f64) -> Result<SpatialField> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let matrix = if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        let (w, h, maxval, pixels) = parse_pgm(path, &bytes)?;
        Matrix {
            width: w,
            height: h,
            values: pixels
                .into_iter()
                .map(|p| p as f64 / maxval as f64 * scale)
                .collect(),
        }
    } else {
        let m = parse_csv_matrix(path, &bytes)?;
        if m.values.iter().any(|&v| v < 0.0) {
            return Err(Error::parse(path, "csv density has negative entries"));
        }
        Matrix {
            values: m.values.iter().map(|v| v * scale).collect(),
            ..m
        }
    };
    resample_nearest(&matrix, space)
}

struct Matrix {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, u32, Vec<u32>)> {
    let binary = bytes.starts_with(b"P5");
    let mut pos = 2usize;
    let mut header = [0usize; 3];
    let mut got = 0;
    while got < 3 {
        // skip whitespace and '#' comments
        while pos < bytes.len() {
            if bytes[pos].is_ascii_whitespace() {
                pos += 1;
            } else if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(Error::parse(path, "truncated or malformed pgm header"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        header[got] = text
            .parse()
            .map_err(|_| Error::parse(path, format!("bad header number {text:?}")))?;
        got += 1;
    }
    let (width, height, maxval) = (header[0], header[1], header[2] as u32);
    if width == 0 || height == 0 {
        return Err(Error::parse(path, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse(path, format!("unsupported maxval {maxval}")));
    }
    let n = width * height;
    let mut pixels = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte after maxval, then the payload
        if pos >= bytes.len() {
            return Err(Error::parse(path, "truncated pgm payload"));
        }
        pos += 1;
        let wide = maxval > 255;
        let need = n * if wide { 2 } else { 1 };
        if bytes.len() < pos + need {
            return Err(Error::parse(path, "truncated pgm payload"));
        }
        for idx in 0..n {
            let v = if wide {
                u32::from(bytes[pos + 2 * idx]) << 8 | u32::from(bytes[pos + 2 * idx + 1])
            } else {
                u32::from(bytes[pos + idx])
            };
            pixels.push(v);
        }
    } else {
        let text = std::str::from_utf8(&bytes[pos..])
            .map_err(|_| Error::parse(path, "non-ascii content in P2 image"))?;
        for tok in text.split_whitespace().take(n) {
            let v: u32 = tok
                .parse()
                .map_err(|_| Error::parse(path, format!("bad pixel value {tok:?}")))?;
            pixels.push(v);
        }
        if pixels.len() < n {
            return Err(Error::parse(path, "truncated pgm payload"));
        }
    }
    if pixels.iter().any(|&p| p > maxval) {
        return Err(Error::parse(path, "pixel value exceeds maxval"));
    }
    Ok((width, height, maxval, pixels))
}

fn parse_csv_matrix(path: &Path, bytes: &[u8]) -> Result<Matrix> {
    let text =
        std::str::from_utf8(bytes).map_err(|_| Error::parse(path, "csv is not valid utf-8"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(path, format!("line {}: bad number {tok:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::parse(
                    path,
                    format!("line {}: ragged row width", lineno + 1),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::parse(path, "empty csv matrix"));
    }
    Ok(Matrix {
        width: rows[0].len(),
        height: rows.len(),
        values: rows.concat(),
    })
}

/// Nearest-neighbor resampling onto the grid. Image row 0 maps to cell row
/// j = 0; a 1D grid reads a single-row matrix or samples the middle row.
fn resample_nearest(m: &Matrix, space: &SpatialGrid) -> Result<SpatialField> {
    let mut out = vec![0.0; space.n_cells()];
    for j in 0..space.n_y() {
        let src_r = if space.n_y() == 1 {
            m.height / 2
        } else {
            (((j as f64 + 0.5) * m.height as f64 / space.n_y() as f64) as usize).min(m.height - 1)
        };
        for i in 0..space.n_x() {
            let src_c =
                (((i as f64 + 0.5) * m.width as f64 / space.n_x() as f64) as usize).min(m.width - 1);
            out[space.cell_index(i, j)] = m.values[src_r * m.width + src_c];
        }
    }
    SpatialField::from_values(space, out)
}

/// Straight-line density path: slice k is (1 - t_k) mu0 + t_k mu1 at the node
/// times t_k = k/(n_t - 1), so the endpoint slices equal mu0 and mu1 exactly.
pub fn linear_path(mu0: &SpatialField, mu1: &SpatialField, grid: &Grid) -> Result<CellField> {
    if !mu0.same_shape(mu1) {
        return Err(Error::ShapeMismatch(
            "linear_path endpoints differ in shape".into(),
        ));
    }
    let time: &TimeGrid = &grid.time;
    let mut out = CellField::zeros(grid);
    for k in 0..time.n_t() {
        let t = time.node(k);
        let slice = out.slice_mut(k);
        for (c, s) in slice.iter_mut().enumerate() {
            *s = (1.0 - t) * mu0.values()[c] + t * mu1.values()[c];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::integrate;

    #[test]
    fn gaussian_mass_is_exact() {
        let s = SpatialGrid::line(35).unwrap();
        let d = make_density(
            &DensitySpec::gaussian(vec![1.0 / 3.0], vec![0.1], 1.0),
            &s,
        )
        .unwrap();
        assert!((integrate(d.values(), &s) - 1.0).abs() < 1e-12);
        assert!(d.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn mixture_mass_is_weight_sum() {
        // rho_0 of the two-bump experiment: N(0, .) + N(1/3, .) integrates to 2
        let s = SpatialGrid::line(35).unwrap();
        let spec = DensitySpec::mixture(
            vec![
                GaussianComponent {
                    mean: vec![0.0],
                    variance: vec![0.1],
                    weight: 1.0,
                },
                GaussianComponent {
                    mean: vec![1.0 / 3.0],
                    variance: vec![0.1],
                    weight: 1.0,
                },
            ],
            1.0,
        );
        let d = make_density(&spec, &s).unwrap();
        assert!((integrate(d.values(), &s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn centered_gaussian_is_symmetric() {
        let s = SpatialGrid::line(34).unwrap();
        let d = make_density(&DensitySpec::gaussian(vec![0.5], vec![0.1], 1.0), &s).unwrap();
        for i in 0..17 {
            let a = d.values()[i];
            let b = d.values()[33 - i];
            assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn uniform_scale_is_mass() {
        let s = SpatialGrid::square(5, 5).unwrap();
        let d = make_density(&DensitySpec::uniform(2.5), &s).unwrap();
        assert!((integrate(d.values(), &s) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn spec_validation_names_the_field() {
        let s = SpatialGrid::line(8).unwrap();
        let bad = DensitySpec::gaussian(vec![0.5], vec![-1.0], 1.0);
        let err = make_density(&bad, &s).unwrap_err().to_string();
        assert!(err.contains("variance"), "{err}");
        let bad = DensitySpec::gaussian(vec![1.5], vec![0.1], 1.0);
        assert!(make_density(&bad, &s).unwrap_err().to_string().contains("mean"));
        let bad = DensitySpec::gaussian(vec![0.5, 0.5], vec![0.1], 1.0);
        assert!(make_density(&bad, &s).is_err());
    }

    fn write_temp(name: &str, contents: &[u8]) -> PathBuf {
        let dir = std::env::temp_dir().join("uot-core-density-tests");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    #[test]
    fn pgm_p2_black_and_white() {
        let s = SpatialGrid::square(2, 2).unwrap();
        let black = write_temp("black.pgm", b"P2\n2 2\n255\n0 0 0 0\n");
        let d = load_grayscale(&black, &s, 1.0).unwrap();
        assert!(d.values().iter().all(|&v| v == 0.0));

        let white = write_temp("white.pgm", b"P2\n2 2\n255\n255 255 255 255\n");
        let d = load_grayscale(&white, &s, 2.0).unwrap();
        assert!(d.values().iter().all(|&v| v == 2.0));
        assert!((integrate(d.values(), &s) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pgm_p2_checkerboard_maps_to_cells() {
        let s = SpatialGrid::square(2, 2).unwrap();
        let img = write_temp("checker.pgm", b"P2\n# comment\n2 2\n100\n0 100\n100 0\n");
        let d = load_grayscale(&img, &s, 1.0).unwrap();
        assert_eq!(d.values(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn pgm_p5_roundtrip_and_errors() {
        let s = SpatialGrid::square(2, 2).unwrap();
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 255, 0]);
        let img = write_temp("bin.pgm", &bytes);
        let d = load_grayscale(&img, &s, 1.0).unwrap();
        assert_eq!(d.values(), &[0.0, 1.0, 1.0, 0.0]);

        // 16-bit payload, big-endian pairs
        let mut wide = b"P5\n2 2\n65535\n".to_vec();
        wide.extend_from_slice(&[0x00, 0x00, 0xff, 0xff, 0x7f, 0xff, 0x00, 0x00]);
        let img = write_temp("wide.pgm", &wide);
        let d = load_grayscale(&img, &s, 1.0).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert_eq!(d.values()[1], 1.0);
        assert!((d.values()[2] - 32767.0 / 65535.0).abs() < 1e-12);

        let bad = write_temp("trunc.pgm", b"P5\n2 2\n255\n\x00\x01");
        assert!(load_grayscale(&bad, &s, 1.0).is_err());
        let bad = write_temp("magic.ppm", b"P6\n2 2\n255\nxxxx");
        // not P2/P5, falls through to csv parsing and fails there
        assert!(load_grayscale(&bad, &s, 1.0).is_err());
        let bad = write_temp("zero.pgm", b"P2\n0 2\n255\n");
        assert!(load_grayscale(&bad, &s, 1.0).is_err());
    }

    #[test]
    fn csv_matrix_reads_row_major() {
        let s = SpatialGrid::square(2, 2).unwrap();
        let csv = write_temp("m.csv", b"0.0, 1.5\n2.5, 0.25\n");
        let d = load_grayscale(&csv, &s, 2.0).unwrap();
        assert_eq!(d.values(), &[0.0, 3.0, 5.0, 0.5]);
        let bad = write_temp("ragged.csv", b"1,2\n3\n");
        assert!(load_grayscale(&bad, &s, 1.0).is_err());
        let bad = write_temp("neg.csv", b"1,-2\n3,4\n");
        assert!(load_grayscale(&bad, &s, 1.0).is_err());
    }

    #[test]
    fn linear_path_interpolates_at_nodes() {
        let s = SpatialGrid::line(3).unwrap();
        let g = Grid::new(s, TimeGrid::new(5).unwrap());
        let mu0 = SpatialField::from_values(&s, vec![0.0; 3]).unwrap();
        let mu1 = SpatialField::from_values(&s, vec![1.0; 3]).unwrap();
        let path = linear_path(&mu0, &mu1, &g).unwrap();
        // endpoints exact, interior affine in k
        assert!(path.slice(0).iter().all(|&v| v == 0.0));
        assert!(path.slice(4).iter().all(|&v| v == 1.0));
        for k in 0..5 {
            let t = k as f64 / 4.0;
            assert!((path.at(k, 1, 0) - t).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_path_of_identical_endpoints_is_constant() {
        let s = SpatialGrid::line(4).unwrap();
        let g = Grid::new(s, TimeGrid::new(4).unwrap());
        let mu = make_density(&DensitySpec::gaussian(vec![0.5], vec![0.05], 1.2), &s).unwrap();
        let path = linear_path(&mu, &mu, &g).unwrap();
        for k in 0..4 {
            for (a, b) in path.slice(k).iter().zip(mu.values()) {
                assert!((a - b).abs() <= 1e-15 * b.abs());
            }
        }
        // mass along the path is affine in k for any endpoints
        let mu1 = make_density(&DensitySpec::gaussian(vec![0.3], vec![0.05], 2.0), &s).unwrap();
        let path = linear_path(&mu, &mu1, &g).unwrap();
        let masses: Vec<f64> = (0..4).map(|k| integrate(path.slice(k), &s)).collect();
        for k in 1..3 {
            let affine = masses[0] + (masses[3] - masses[0]) * k as f64 / 3.0;
            assert!((masses[k] - affine).abs() < 1e-12);
        }
    }
}
