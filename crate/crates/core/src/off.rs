//! ASCII OFF reader and writer.
//!
//! Only the plain ASCII dialect is accepted; `COFF`, `NOFF` and binary
//! variants are rejected. Comments (`#`) and blank lines are skipped.
//! The counts line may follow the `OFF` token or share its line.

use nalgebra::Point3;

use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Parse an ASCII OFF file into a mesh with the given id.
pub fn parse_off(id: impl Into<String>, bytes: &[u8]) -> Result<TriMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|_| Error::parse(0, "file is not valid UTF-8/ASCII"))?;

    // (line number, token) stream with comments and blanks stripped
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        for tok in line.split_whitespace() {
            tokens.push((ln + 1, tok));
        }
    }

    let mut pos = 0usize;
    let mut next = |what: &str| -> Result<(usize, &str)> {
        match tokens.get(pos) {
            Some(&t) => {
                pos += 1;
                Ok(t)
            }
            None => Err(Error::parse(
                tokens.last().map(|t| t.0).unwrap_or(0),
                format!("unexpected end of file, expected {what}"),
            )),
        }
    };

    let (hline, header) = next("OFF header")?;
    if header != "OFF" {
        return Err(Error::parse(
            hline,
            format!("expected OFF header, found {header:?}"),
        ));
    }

    let parse_count = |(ln, tok): (usize, &str), what: &str| -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| Error::parse(ln, format!("bad {what} count {tok:?}")))
    };
    let n_verts = parse_count(next("vertex count")?, "vertex")?;
    let n_faces = parse_count(next("face count")?, "face")?;
    let _n_edges = parse_count(next("edge count")?, "edge")?;

    let mut vertices = Vec::with_capacity(n_verts);
    for i in 0..n_verts {
        let mut coord = [0f64; 3];
        for c in coord.iter_mut() {
            let (ln, tok) = next("vertex coordinate")?;
            *c = tok
                .parse::<f64>()
                .map_err(|_| Error::parse(ln, format!("bad coordinate {tok:?} in vertex {i}")))?;
        }
        vertices.push(Point3::new(coord[0], coord[1], coord[2]));
    }

    let mut faces = Vec::with_capacity(n_faces);
    for i in 0..n_faces {
        let (ln, tok) = next("face vertex count")?;
        let nv: usize = tok
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad face size {tok:?} in face {i}")))?;
        if nv != 3 {
            return Err(Error::parse(ln, format!("non-triangular face with {nv} vertices")));
        }
        let mut f = [0usize; 3];
        for v in f.iter_mut() {
            let (ln, tok) = next("face index")?;
            *v = tok
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad vertex index {tok:?} in face {i}")))?;
            if *v >= n_verts {
                return Err(Error::parse(
                    ln,
                    format!("face index {v} out of range (only {n_verts} vertices)"),
                ));
            }
        }
        faces.push(f);
    }

    if pos != tokens.len() {
        let (ln, tok) = tokens[pos];
        return Err(Error::parse(
            ln,
            format!("trailing data {tok:?} after declared counts"),
        ));
    }

    TriMesh::new(id, vertices, faces)
}

/// Serialize a mesh as ASCII OFF. Coordinates are printed with the shortest
/// representation that round-trips exactly.
pub fn serialize_off(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str("OFF\n");
    out.push_str(&format!("{} {} 0\n", mesh.vertex_count(), mesh.face_count()));
    for v in mesh.vertices() {
        out.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn minimal_valid_file() {
        let src = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let mesh = parse_off("tri", src.as_bytes()).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
        assert_eq!(mesh.face_count(), 1);
    }

    #[test]
    fn counts_on_header_line() {
        let src = "OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let mesh = parse_off("tri", src.as_bytes()).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let src = "# a comment\nOFF\n\n3 1 0 # counts\n0 0 0\n1 0 0\n\n0 1 0\n3 0 1 2\n";
        assert!(parse_off("tri", src.as_bytes()).is_ok());
    }

    #[test]
    fn tetrahedron_round_trip() {
        let tet = shapes::tetrahedron();
        let text = serialize_off(&tet);
        let back = parse_off("tetrahedron", text.as_bytes()).unwrap();
        assert_eq!(back.vertex_count(), 4);
        assert_eq!(back.face_count(), 4);
        for a in 0..4 {
            for b in (a + 1)..4 {
                assert_eq!(back.edge_face_count(a, b), 2);
            }
        }
    }

    #[test]
    fn round_trip_is_exact() {
        // shortest round-trip printing must reproduce the arrays bit for bit
        let sphere = shapes::icosphere(1.337, 2);
        let text = serialize_off(&sphere);
        let back = parse_off("icosphere", text.as_bytes()).unwrap();
        assert_eq!(back.faces(), sphere.faces());
        for (a, b) in back.vertices().iter().zip(sphere.vertices()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn non_triangular_face_rejected() {
        let src = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let err = parse_off("quad", src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("non-triangular"), "{err}");
        assert!(err.to_string().contains("line 7"), "{err}");
    }

    #[test]
    fn missing_header_rejected() {
        let err = parse_off("x", b"3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap_err();
        assert!(err.to_string().contains("OFF header"), "{err}");
    }

    #[test]
    fn coff_rejected() {
        let err = parse_off("x", b"COFF\n3 1 0\n").unwrap_err();
        assert!(err.to_string().contains("COFF"), "{err}");
    }

    #[test]
    fn count_mismatch_rejected() {
        // declares 4 vertices but provides 3
        let src = "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        assert!(parse_off("x", src.as_bytes()).is_err());
        // trailing face not covered by the declared count
        let src = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n3 0 2 1\n";
        let err = parse_off("x", src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }

    #[test]
    fn out_of_range_face_index_rejected() {
        let src = "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n";
        let err = parse_off("x", src.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }
}
