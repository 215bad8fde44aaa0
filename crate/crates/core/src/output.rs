//! Text and image emitters for fields, convergence reports and trajectories.
//!
//! Floats are written with 17 significant digits so files reproduce values exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::analysis::ConvergenceReport;
use crate::domain::Grid2D;
use crate::error::{Error, Result};
use crate::path::Trajectory;

/// 17 significant digits; infinities as `inf`, `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_field_csv<W: Write>(mut w: W, grid: &Grid2D, u: &[f64]) -> io::Result<()> {
    writeln!(w, "i,j,x,y,u")?;
    for (idx, v) in u.iter().enumerate().take(grid.len()) {
        let (i, j) = grid.coords(idx);
        let p = grid.point(i, j);
        writeln!(
            w,
            "{i},{j},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(*v)
        )?;
    }
    Ok(())
}

/// Binary 8-bit PGM, top row first; finite values span 0..=255, others are black.
pub fn write_heatmap_pgm<W: Write>(mut w: W, grid: &Grid2D, u: &[f64]) -> io::Result<()> {
    let (lo, hi) = u
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let span = hi - lo;
    write!(w, "P5\n{} {}\n255\n", grid.nx(), grid.ny())?;
    let mut row = Vec::with_capacity(grid.nx());
    for j in (0..grid.ny()).rev() {
        row.clear();
        for i in 0..grid.nx() {
            let v = u[grid.index(i, j)];
            let g = if !v.is_finite() {
                0
            } else if span > 0.0 {
                (255.0 * (v - lo) / span).round() as u8
            } else {
                0
            };
            row.push(g);
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// One row per level: `method,h,linf,l1,order_tail`, where the last column repeats the
/// L∞ order fitted over the report's tail.
pub fn write_convergence_csv<W: Write>(mut w: W, reports: &[ConvergenceReport]) -> io::Result<()> {
    writeln!(w, "method,h,linf,l1,order_tail")?;
    for r in reports {
        for row in &r.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.method,
                fmt_f64(row.h),
                fmt_f64(row.linf),
                fmt_f64(row.l1),
                fmt_f64(r.order_linf)
            )?;
        }
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(mut w: W, t: &Trajectory) -> io::Result<()> {
    writeln!(w, "x,y")?;
    for p in &t.points {
        writeln!(w, "{},{}", fmt_f64(p.x), fmt_f64(p.y))?;
    }
    Ok(())
}

/// Creates `path` and runs `body` on a buffered writer, tagging I/O errors with the path.
pub fn to_file(
    path: impl AsRef<Path>,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<()> {
    let path = path.as_ref();
    let tag = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(tag)?);
    body(&mut w).map_err(tag)?;
    w.flush().map_err(tag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn text(f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn zero_field_csv() {
        let g = Grid2D::new(2, 2, 1.0, Point::ZERO).unwrap();
        let s = text(|w| write_field_csv(w, &g, &[0.0; 4]));
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "i,j,x,y,u");
        assert!(lines[1..]
            .iter()
            .all(|l| l.ends_with(",0.0000000000000000e0")));
        assert_eq!(
            lines[2],
            "1,0,1.0000000000000000e0,0.0000000000000000e0,0.0000000000000000e0"
        );
    }

    #[test]
    fn infinite_value_is_inf() {
        let g = Grid2D::new(2, 1 + 1, 1.0, Point::ZERO).unwrap();
        let s = text(|w| write_field_csv(w, &g, &[0.0, f64::INFINITY, 1.0, 2.0]));
        assert!(s.lines().nth(2).unwrap().ends_with(",inf"));
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let v = 0.1 + 0.2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn heatmap_ramp() {
        let g = Grid2D::new(5, 5, 0.25, Point::ZERO).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| g.node_point(i).x).collect();
        let mut buf = Vec::new();
        write_heatmap_pgm(&mut buf, &g, &u).unwrap();
        let header = b"P5\n5 5\n255\n";
        assert_eq!(&buf[..header.len()], header);
        let pixels = &buf[header.len()..];
        assert_eq!(pixels.len(), 25);
        for row in pixels.chunks(5) {
            assert_eq!(row, &[0, 64, 128, 191, 255]);
        }
    }

    #[test]
    fn io_error_carries_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("x.csv");
        match to_file(&path, |w| w.write_all(b"x")) {
            Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
            other => panic!("unexpected {other:?}"),
        }
    }
}
