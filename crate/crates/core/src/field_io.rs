//! Text dump of a [`MapField`]: `#!` key lines, free `#` comments, then one
//! CSV row per node with its coordinates and target components.
//!
//! ```text
//! # dbar 0.1.0
//! #! source = hopf_torus
//! #! target = hopf_surface
//! #! alpha = 2
//! #! n_s = 64
//! #! n_theta = 64
//! #! periods = 6.9314718055994529e-1,6.2831853071795862e0
//! #! twist = 1,0;0,0
//! #! dim = 4
//! i,j,sigma_s,sigma_theta,y0,y1,y2,y3
//! 0,0,0.00000000000000000e0,...
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::discrete_map::{GridSpec, MapField, MapSpace, TwistData};
use crate::error::{Error, Result};
use crate::models::{SourceSurface, TargetManifold};
use crate::tensor::Vector;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldHeader {
    pub source: String,
    pub target: String,
    pub alpha: Option<f64>,
    pub grid: GridSpec,
    pub twist: TwistData,
    pub dim: usize,
}

impl FieldHeader {
    pub fn for_space<S, T, const N: usize>(space: &MapSpace<S, T, N>, twist: TwistData, alpha: Option<f64>) -> Self
    where
        S: SourceSurface,
        T: TargetManifold<N>,
    {
        Self {
            source: space.source.name().to_string(),
            target: space.target.name().to_string(),
            alpha,
            grid: space.grid(),
            twist,
            dim: N,
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::FieldFormat(msg.into())
}

/// Write `f` with `comments` as leading `#` lines.
pub fn write_field<W: Write, const N: usize>(
    mut w: W,
    header: &FieldHeader,
    f: &MapField<N>,
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "#! source = {}", header.source)?;
    writeln!(w, "#! target = {}", header.target)?;
    match header.alpha {
        Some(a) => writeln!(w, "#! alpha = {a:.17e}")?,
        None => writeln!(w, "#! alpha = none")?,
    }
    writeln!(w, "#! n_s = {}", f.grid.n[0])?;
    writeln!(w, "#! n_theta = {}", f.grid.n[1])?;
    writeln!(w, "#! periods = {:.17e},{:.17e}", f.grid.periods[0], f.grid.periods[1])?;
    let t = f.twist;
    writeln!(
        w,
        "#! twist = {},{};{},{}",
        t.along_s[0], t.along_s[1], t.along_theta[0], t.along_theta[1]
    )?;
    writeln!(w, "#! dim = {N}")?;
    let ys: Vec<String> = (0..N).map(|k| format!("y{k}")).collect();
    writeln!(w, "i,j,sigma_s,sigma_theta,{}", ys.join(","))?;
    for i in 0..f.grid.n[0] {
        for j in 0..f.grid.n[1] {
            let c = f.grid.coord(i, j);
            write!(w, "{i},{j},{:.17e},{:.17e}", c[0], c[1])?;
            for x in f.get(i, j).iter() {
                write!(w, ",{x:.17e}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| bad(format!("{key}: cannot parse {v:?}")))
}

fn parse_twist(v: &str) -> Result<TwistData> {
    let parts: Vec<&str> = v.split(';').collect();
    if parts.len() != 2 {
        return Err(bad(format!("twist: expected `a,b;c,d`, got {v:?}")));
    }
    let pair = |s: &str| -> Result<[i64; 2]> {
        let xs: Vec<i64> = s.split(',').map(|x| parse_num("twist", x)).collect::<Result<_>>()?;
        xs.try_into().map_err(|_| bad(format!("twist: expected two integers in {s:?}")))
    };
    Ok(TwistData {
        along_s: pair(parts[0])?,
        along_theta: pair(parts[1])?,
    })
}

/// Parse a dump written by [`write_field`].
pub fn read_field<R: BufRead, const N: usize>(r: R) -> Result<(FieldHeader, MapField<N>)> {
    let mut keys = BTreeMap::new();
    let mut lines = r.lines();
    let mut columns = None;
    for line in lines.by_ref() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if let Some(rest) = line.strip_prefix("#!") {
            let (k, v) = rest.split_once('=').ok_or_else(|| bad(format!("malformed key line {line:?}")))?;
            keys.insert(k.trim().to_string(), v.trim().to_string());
        } else if line.starts_with('#') || line.trim().is_empty() {
            continue;
        } else {
            columns = Some(line);
            break;
        }
    }
    let get = |k: &str| keys.get(k).ok_or_else(|| bad(format!("missing header key {k:?}")));
    let dim: usize = parse_num("dim", get("dim")?)?;
    if dim != N {
        return Err(bad(format!("dump has dimension {dim}, expected {N}")));
    }
    let periods: Vec<f64> = get("periods")?
        .split(',')
        .map(|x| parse_num("periods", x))
        .collect::<Result<_>>()?;
    let periods: [f64; 2] = periods.try_into().map_err(|_| bad("periods: expected two values"))?;
    let grid = GridSpec::new(parse_num("n_s", get("n_s")?)?, parse_num("n_theta", get("n_theta")?)?, periods)
        .map_err(|e| bad(e.to_string()))?;
    let alpha = match get("alpha")?.as_str() {
        "none" => None,
        v => Some(parse_num("alpha", v)?),
    };
    let header = FieldHeader {
        source: get("source")?.clone(),
        target: get("target")?.clone(),
        alpha,
        grid,
        twist: parse_twist(get("twist")?)?,
        dim,
    };
    let columns = columns.ok_or_else(|| bad("missing column line"))?;
    if columns.split(',').count() != 4 + N {
        return Err(bad(format!("expected {} columns, got {columns:?}", 4 + N)));
    }
    let mut values = vec![None; grid.len()];
    for (row, line) in lines.enumerate() {
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 + N {
            return Err(bad(format!("row {row}: expected {} cells", 4 + N)));
        }
        let i: usize = parse_num("i", cells[0])?;
        let j: usize = parse_num("j", cells[1])?;
        if i >= grid.n[0] || j >= grid.n[1] {
            return Err(bad(format!("row {row}: node ({i}, {j}) outside the grid")));
        }
        let mut y = Vector::<N>::zeros();
        for k in 0..N {
            y[k] = parse_num("value", cells[4 + k])?;
        }
        values[grid.index(i, j)] = Some(y);
    }
    let values = values
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| bad(format!("node {:?} missing", grid.node(k)))))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        header.clone(),
        MapField {
            grid,
            twist: header.twist,
            values,
        },
    ))
}

/// [`read_field`], checked against the models and grid of `space`.
pub fn read_field_for<R, S, T, const N: usize>(space: &MapSpace<S, T, N>, r: R) -> Result<MapField<N>>
where
    R: BufRead,
    S: SourceSurface,
    T: TargetManifold<N>,
{
    let (header, f) = read_field::<R, N>(r)?;
    if header.source != space.source.name() || header.target != space.target.name() {
        return Err(bad(format!(
            "dump is {} -> {}, expected {} -> {}",
            header.source,
            header.target,
            space.source.name(),
            space.target.name()
        )));
    }
    let g = space.grid();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    if header.grid.n != g.n || !close(header.grid.periods[0], g.periods[0]) || !close(header.grid.periods[1], g.periods[1]) {
        return Err(Error::GridMismatch(format!("dump grid {:?}, space grid {:?}", header.grid, g)));
    }
    let f = MapField { grid: g, ..f };
    space.validate(&f)?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete_map::StencilOrder;
    use crate::hopf_family::{family_map, random_frame};
    use crate::models::{FlatTorus, HopfSurface, HopfTorusSource};
    use crate::rng::SplitMix64;

    #[test]
    fn hopf_dump_round_trips() {
        let sp = MapSpace::new(
            HopfTorusSource::new(2.0).unwrap(),
            HopfSurface::new(2.0).unwrap(),
            [16, 12],
            StencilOrder::Second,
        )
        .unwrap();
        let fr = random_frame(&mut SplitMix64::new(4), 2.0).unwrap();
        let f = family_map(&sp, &fr);
        let header = FieldHeader::for_space(&sp, f.twist, Some(2.0));
        let mut buf = Vec::new();
        write_field(&mut buf, &header, &f, &["dbar test".into()]).unwrap();
        let (h, g) = read_field::<_, 4>(buf.as_slice()).unwrap();
        assert_eq!(h.twist, f.twist);
        assert_eq!(h.alpha, Some(2.0));
        for (a, b) in f.values.iter().zip(&g.values) {
            assert!((a - b).norm() <= 1e-15 * a.norm());
        }
        let g2 = read_field_for(&sp, buf.as_slice()).unwrap();
        assert_eq!(g2.values, g.values);
    }

    #[test]
    fn mismatches_are_rejected() {
        let t = FlatTorus::unit_square();
        let sp = MapSpace::new(t, t, [8, 8], StencilOrder::Second).unwrap();
        let f = sp.sample(TwistData::TRIVIAL, |p| *p * 0.0);
        let mut buf = Vec::new();
        write_field(&mut buf, &FieldHeader::for_space(&sp, f.twist, None), &f, &[]).unwrap();
        assert!(matches!(read_field::<_, 4>(buf.as_slice()), Err(Error::FieldFormat(_))));
        let other = MapSpace::new(t, t, [8, 16], StencilOrder::Second).unwrap();
        assert!(matches!(read_field_for(&other, buf.as_slice()), Err(Error::GridMismatch(_))));
        let text = String::from_utf8(buf).unwrap().replace("#! dim = 2\n", "");
        assert!(matches!(read_field::<_, 2>(text.as_bytes()), Err(Error::FieldFormat(_))));
    }
}
