//! Trajectory CSV files: header `traj_id,seq,c1,...,cd`, one vertex per row.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CctError, Result};
use crate::geometry::{TrajId, Trajectory, TrajectorySet};

pub fn read_trajectories_from<R: Read>(reader: R) -> Result<TrajectorySet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "traj_id" || &headers[1] != "seq" {
        return Err(CctError::Parse(
            "expected header traj_id,seq,c1,...,cd".into(),
        ));
    }
    let dim = headers.len() - 2;
    let mut rows: BTreeMap<TrajId, Vec<(u64, Vec<f64>)>> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| CctError::Parse(format!("row {}: missing column {}", line + 2, i + 1)))
        };
        if rec.len() != headers.len() {
            return Err(CctError::DimensionMismatch {
                expected: dim,
                found: rec.len().saturating_sub(2),
            });
        }
        let num_err = |what: &str| CctError::Parse(format!("row {}: invalid {what}", line + 2));
        let id: TrajId = field(0)?.parse().map_err(|_| num_err("traj_id"))?;
        let seq: u64 = field(1)?.parse().map_err(|_| num_err("seq"))?;
        let coords = (2..rec.len())
            .map(|i| field(i)?.parse::<f64>().map_err(|_| num_err("coordinate")))
            .collect::<Result<Vec<f64>>>()?;
        rows.entry(id).or_default().push((seq, coords));
    }
    let mut set = TrajectorySet::default();
    for (id, mut verts) in rows {
        verts.sort_by_key(|v| v.0);
        let coords: Vec<f64> = verts.into_iter().flat_map(|v| v.1).collect();
        set.push(Trajectory::new(id, dim, coords)?)?;
    }
    Ok(set)
}

pub fn read_trajectories(path: impl AsRef<Path>) -> Result<TrajectorySet> {
    let f = std::fs::File::open(path.as_ref())?;
    read_trajectories_from(std::io::BufReader::new(f))
}

/// Writes trajectories in ascending id order.
pub fn write_trajectories_to<'a, W: Write, I>(writer: W, trajs: I) -> Result<()>
where
    I: IntoIterator<Item = &'a Trajectory>,
{
    let mut sorted: Vec<&Trajectory> = trajs.into_iter().collect();
    sorted.sort_by_key(|t| t.id());
    let mut w = csv::Writer::from_writer(writer);
    let dim = sorted.first().map_or(0, |t| t.dim());
    let mut header = vec!["traj_id".to_string(), "seq".to_string()];
    header.extend((1..=dim).map(|i| format!("c{i}")));
    w.write_record(&header)?;
    for t in sorted {
        for (seq, v) in t.vertices().enumerate() {
            let mut rec = vec![t.id().to_string(), seq.to_string()];
            rec.extend(v.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectories<'a, I>(path: impl AsRef<Path>, trajs: I) -> Result<()>
where
    I: IntoIterator<Item = &'a Trajectory>,
{
    let f = std::fs::File::create(path.as_ref())?;
    write_trajectories_to(std::io::BufWriter::new(f), trajs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = Trajectory::from_points(7, &[[0.0, 0.5], [1.25, -3.0]]).unwrap();
        let b = Trajectory::from_points(2, &[[1.0, 1.0], [2.0, 2.0], [0.1, 0.2]]).unwrap();
        let mut buf = Vec::new();
        write_trajectories_to(&mut buf, [&a, &b]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("traj_id,seq,c1,c2\n2,0,1,1\n"));
        let set = read_trajectories_from(buf.as_slice()).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.get(7).unwrap(), &a);
        assert_eq!(set.get(2).unwrap(), &b);
    }

    #[test]
    fn rows_out_of_order_are_sorted_by_seq() {
        let text = "traj_id,seq,c1\n1,1,5\n1,0,0\n";
        let set = read_trajectories_from(text.as_bytes()).unwrap();
        assert_eq!(set.get(1).unwrap().coords(), &[0.0, 5.0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_trajectories_from("id,seq,x\n".as_bytes()).is_err());
        assert!(read_trajectories_from("traj_id,seq,c1\n1,0,abc\n1,1,2\n".as_bytes()).is_err());
        assert!(matches!(
            read_trajectories_from("traj_id,seq,c1\n1,0,1\n".as_bytes()),
            Err(CctError::DegenerateTrajectory(1))
        ));
    }
}
