//! Binary dump of a graphical sample, for reproducing failures.
//!
//! Layout, all little-endian: magic `CPGS`, `u32` version, `u64` seed,
//! `f64` lambda, `f64` window start, `f64` window end, `u64` vertex count,
//! `u64` directed edge count, then one stream per vertex (recovery marks)
//! followed by one per directed edge id (arrows). Each stream is a `u64`
//! length followed by that many `f64` times.

use alloc::vec::Vec;

use super::{ExplicitSample, PoissonSource, Stream};
use crate::graph::Graph;

const MAGIC: &[u8; 4] = b"CPGS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DumpError {
    #[error("not a graphical sample dump")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    Version(u32),
    #[error("dump truncated at byte {0}")]
    Truncated(usize),
    #[error("dump is for {found_vertices} vertices / {found_edges} edges, graph has {vertices} / {edges}")]
    GraphMismatch { vertices: usize, edges: usize, found_vertices: usize, found_edges: usize },
    #[error("stream {0} is not strictly increasing inside the window")]
    BadStream(usize),
}

/// Header fields of a decoded dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DumpHeader {
    pub seed: u64,
    pub lambda: f64,
    pub window: (f64, f64),
}

pub fn encode_sample<S: PoissonSource>(source: &S, seed: u64, lambda: f64) -> Vec<u8> {
    let g = source.graph();
    let (start, end) = source.window();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&lambda.to_le_bytes());
    out.extend_from_slice(&start.to_le_bytes());
    out.extend_from_slice(&end.to_le_bytes());
    out.extend_from_slice(&(g.len() as u64).to_le_bytes());
    out.extend_from_slice(&(g.edge_count() as u64).to_le_bytes());
    let streams = (0..g.len()).map(Stream::Mark).chain((0..g.edge_count()).map(Stream::Arrow));
    for stream in streams {
        let points = source.points(stream);
        out.extend_from_slice(&(points.len() as u64).to_le_bytes());
        for t in points {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], DumpError> {
        let chunk = self.bytes.get(self.at..self.at + N).ok_or(DumpError::Truncated(self.at))?;
        self.at += N;
        Ok(chunk.try_into().expect("length checked"))
    }

    fn u64(&mut self) -> Result<u64, DumpError> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, DumpError> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

pub fn decode_sample<'g>(graph: &'g Graph, bytes: &[u8]) -> Result<(DumpHeader, ExplicitSample<'g>), DumpError> {
    let mut r = Reader { bytes, at: 0 };
    if &r.take::<4>()? != MAGIC {
        return Err(DumpError::BadMagic);
    }
    let version = u32::from_le_bytes(r.take::<4>()?);
    if version != VERSION {
        return Err(DumpError::Version(version));
    }
    let seed = r.u64()?;
    let lambda = r.f64()?;
    let window = (r.f64()?, r.f64()?);
    let vertices = r.u64()? as usize;
    let edges = r.u64()? as usize;
    if vertices != graph.len() || edges != graph.edge_count() {
        return Err(DumpError::GraphMismatch {
            vertices: graph.len(),
            edges: graph.edge_count(),
            found_vertices: vertices,
            found_edges: edges,
        });
    }
    let mut streams = Vec::with_capacity(vertices + edges);
    for index in 0..vertices + edges {
        let len = r.u64()? as usize;
        if len > (bytes.len() - r.at) / 8 {
            return Err(DumpError::Truncated(r.at));
        }
        let mut points = Vec::with_capacity(len);
        for _ in 0..len {
            points.push(r.f64()?);
        }
        let ordered = points.windows(2).all(|w| w[0] < w[1]);
        let inside = points.iter().all(|&t| t >= window.0 && t <= window.1);
        if !ordered || !inside {
            return Err(DumpError::BadStream(index));
        }
        streams.push(points);
    }
    let arrows = streams.split_off(vertices);
    Ok((DumpHeader { seed, lambda, window }, ExplicitSample::from_parts(graph, window, streams, arrows)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, GraphSpec};
    use crate::graphical::{evolve, Configuration, GraphicalSample};

    #[test]
    fn round_trip_replays_identically() {
        let g = build_graph(&GraphSpec::lattice(1, 4)).unwrap();
        let s = GraphicalSample::new(&g, (-1.0, 6.0), 2.0, 31);
        let bytes = encode_sample(&s, 31, 2.0);
        let (header, replay) = decode_sample(&g, &bytes).unwrap();
        assert_eq!(header, DumpHeader { seed: 31, lambda: 2.0, window: (-1.0, 6.0) });
        let init = Configuration::ones(g.len(), -1.0);
        let all: Vec<usize> = (0..g.len()).collect();
        assert_eq!(evolve(&s, &init, &all).unwrap(), evolve(&replay, &init, &all).unwrap());
        assert_eq!(encode_sample(&replay, 31, 2.0), bytes);
    }

    #[test]
    fn corrupt_dumps_rejected() {
        let g = build_graph(&GraphSpec::lattice(1, 1)).unwrap();
        let s = GraphicalSample::new(&g, (0.0, 4.0), 1.0, 2);
        let bytes = encode_sample(&s, 2, 1.0);
        assert_eq!(decode_sample(&g, &bytes[..10]).unwrap_err(), DumpError::Truncated(8));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(decode_sample(&g, &bad).unwrap_err(), DumpError::BadMagic);
        let other = build_graph(&GraphSpec::lattice(1, 2)).unwrap();
        assert!(matches!(decode_sample(&other, &bytes), Err(DumpError::GraphMismatch { .. })));
    }
}
