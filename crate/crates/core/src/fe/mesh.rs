//! Hex8 meshes: the structured-cube generator and a plain-text file format.
//!
//! File grammar (whitespace separated, `#` starts a comment line):
//!
//! ```text
//! nodes <N>
//! <x> <y> <z>          # N coordinate lines
//! elements <E>
//! <n0> ... <n7>        # E connectivity lines, zero-based node indices
//! nodeset <name> <K>
//! <id> ...             # K indices, free layout
//! facetset <name> <K>
//! <n0> <n1> <n2> <n3>  # K quad facets, outward orientation
//! ```

use std::collections::BTreeMap;

use super::FeError;

#[derive(Debug, Clone, Default)]
pub struct Mesh {
    pub coords: Vec<[f64; 3]>,
    pub elements: Vec<[usize; 8]>,
    pub node_sets: BTreeMap<String, Vec<usize>>,
    pub facet_sets: BTreeMap<String, Vec<[usize; 4]>>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn validate(&self) -> Result<(), FeError> {
        let n = self.n_nodes();
        for (e, conn) in self.elements.iter().enumerate() {
            for &node in conn {
                if node >= n {
                    return Err(FeError::MeshInvalid(format!(
                        "element {e} references node {node}, mesh has {n} nodes"
                    )));
                }
            }
        }
        for (name, nodes) in &self.node_sets {
            if let Some(&bad) = nodes.iter().find(|&&i| i >= n) {
                return Err(FeError::MeshInvalid(format!(
                    "node set {name:?} references node {bad}, mesh has {n} nodes"
                )));
            }
        }
        for (name, facets) in &self.facet_sets {
            for facet in facets {
                if let Some(&bad) = facet.iter().find(|&&i| i >= n) {
                    return Err(FeError::MeshInvalid(format!(
                        "facet set {name:?} references node {bad}, mesh has {n} nodes"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize], FeError> {
        self.node_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or(FeError::UnknownSet {
                kind: "node",
                name: name.to_string(),
            })
    }

    pub fn facet_set(&self, name: &str) -> Result<&[[usize; 4]], FeError> {
        self.facet_sets
            .get(name)
            .map(|v| v.as_slice())
            .ok_or(FeError::UnknownSet {
                kind: "facet",
                name: name.to_string(),
            })
    }

    /// Parses the plain-text mesh format described in the module docs.
    pub fn from_text(text: &str) -> Result<Mesh, FeError> {
        let mut tokens = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                tokens.push((lineno + 1, tok));
            }
        }
        let mut pos = 0usize;
        let next = |pos: &mut usize| -> Option<(usize, &str)> {
            let t = tokens.get(*pos).copied();
            *pos += 1;
            t
        };
        let parse_usize = |pos: &mut usize, what: &str| -> Result<usize, FeError> {
            let (line, tok) = next(pos).ok_or(FeError::MeshParse {
                line: tokens.last().map_or(0, |t| t.0),
                message: format!("unexpected end of file, expected {what}"),
            })?;
            tok.parse().map_err(|_| FeError::MeshParse {
                line,
                message: format!("expected {what}, got {tok:?}"),
            })
        };
        let parse_f64 = |pos: &mut usize, what: &str| -> Result<f64, FeError> {
            let (line, tok) = next(pos).ok_or(FeError::MeshParse {
                line: tokens.last().map_or(0, |t| t.0),
                message: format!("unexpected end of file, expected {what}"),
            })?;
            tok.parse().map_err(|_| FeError::MeshParse {
                line,
                message: format!("expected {what}, got {tok:?}"),
            })
        };

        let mut mesh = Mesh::default();
        while let Some((line, keyword)) = next(&mut pos) {
            match keyword {
                "nodes" => {
                    let count = parse_usize(&mut pos, "node count")?;
                    mesh.coords.reserve(count);
                    for _ in 0..count {
                        let x = parse_f64(&mut pos, "coordinate")?;
                        let y = parse_f64(&mut pos, "coordinate")?;
                        let z = parse_f64(&mut pos, "coordinate")?;
                        mesh.coords.push([x, y, z]);
                    }
                }
                "elements" => {
                    let count = parse_usize(&mut pos, "element count")?;
                    mesh.elements.reserve(count);
                    for _ in 0..count {
                        let mut conn = [0usize; 8];
                        for slot in conn.iter_mut() {
                            *slot = parse_usize(&mut pos, "node index")?;
                        }
                        mesh.elements.push(conn);
                    }
                }
                "nodeset" => {
                    let (nline, name) = next(&mut pos).ok_or(FeError::MeshParse {
                        line,
                        message: "nodeset needs a name".to_string(),
                    })?;
                    let _ = nline;
                    let count = parse_usize(&mut pos, "node set size")?;
                    let mut ids = Vec::with_capacity(count);
                    for _ in 0..count {
                        ids.push(parse_usize(&mut pos, "node index")?);
                    }
                    mesh.node_sets.insert(name.to_string(), ids);
                }
                "facetset" => {
                    let (nline, name) = next(&mut pos).ok_or(FeError::MeshParse {
                        line,
                        message: "facetset needs a name".to_string(),
                    })?;
                    let _ = nline;
                    let count = parse_usize(&mut pos, "facet set size")?;
                    let mut facets = Vec::with_capacity(count);
                    for _ in 0..count {
                        let mut facet = [0usize; 4];
                        for slot in facet.iter_mut() {
                            *slot = parse_usize(&mut pos, "node index")?;
                        }
                        facets.push(facet);
                    }
                    mesh.facet_sets.insert(name.to_string(), facets);
                }
                other => {
                    return Err(FeError::MeshParse {
                        line,
                        message: format!("unknown keyword {other:?}"),
                    })
                }
            }
        }
        mesh.validate()?;
        Ok(mesh)
    }

    /// Serializes to the plain-text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("nodes {}\n", self.n_nodes()));
        for c in &self.coords {
            out.push_str(&format!("{} {} {}\n", c[0], c[1], c[2]));
        }
        out.push_str(&format!("elements {}\n", self.n_elements()));
        for e in &self.elements {
            let row: Vec<String> = e.iter().map(|n| n.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for (name, ids) in &self.node_sets {
            out.push_str(&format!("nodeset {} {}\n", name, ids.len()));
            let row: Vec<String> = ids.iter().map(|n| n.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for (name, facets) in &self.facet_sets {
            out.push_str(&format!("facetset {} {}\n", name, facets.len()));
            for f in facets {
                out.push_str(&format!("{} {} {} {}\n", f[0], f[1], f[2], f[3]));
            }
        }
        out
    }
}

/// Structured mesh of the unit cube with `n` subdivisions per edge:
/// (n+1)^3 nodes and n^3 hex8 elements. Ships the face node sets
/// "xmin"/"xmax"/... and the facet set "xmax_facets" for traction tests.
pub fn build_structured_cube(n: usize) -> Mesh {
    assert!(n >= 1, "cube needs at least one subdivision");
    let np = n + 1;
    let node = |i: usize, j: usize, k: usize| -> usize { i + np * (j + np * k) };

    // Node ordering matches `node(i, j, k)`: i fastest.
    let mut coords = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                coords.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
            }
        }
    }

    let mut elements = Vec::with_capacity(n * n * n);
    for ez in 0..n {
        for ey in 0..n {
            for ex in 0..n {
                elements.push([
                    node(ex, ey, ez),
                    node(ex + 1, ey, ez),
                    node(ex + 1, ey + 1, ez),
                    node(ex, ey + 1, ez),
                    node(ex, ey, ez + 1),
                    node(ex + 1, ey, ez + 1),
                    node(ex + 1, ey + 1, ez + 1),
                    node(ex, ey + 1, ez + 1),
                ]);
            }
        }
    }

    let mut node_sets = BTreeMap::new();
    let face = |pick: &dyn Fn(usize, usize, usize) -> bool| -> Vec<usize> {
        let mut ids = Vec::new();
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    if pick(i, j, k) {
                        ids.push(node(i, j, k));
                    }
                }
            }
        }
        ids
    };
    node_sets.insert("xmin".to_string(), face(&|i, _, _| i == 0));
    node_sets.insert("xmax".to_string(), face(&|i, _, _| i == n));
    node_sets.insert("ymin".to_string(), face(&|_, j, _| j == 0));
    node_sets.insert("ymax".to_string(), face(&|_, j, _| j == n));
    node_sets.insert("zmin".to_string(), face(&|_, _, k| k == 0));
    node_sets.insert("zmax".to_string(), face(&|_, _, k| k == n));

    let mut facet_sets = BTreeMap::new();
    let mut xmax_facets = Vec::with_capacity(n * n);
    for ez in 0..n {
        for ey in 0..n {
            // Outward +x face of the last element column, counterclockwise
            // seen from +x.
            xmax_facets.push([
                node(n, ey, ez),
                node(n, ey + 1, ez),
                node(n, ey + 1, ez + 1),
                node(n, ey, ez + 1),
            ]);
        }
    }
    facet_sets.insert("xmax_facets".to_string(), xmax_facets);

    Mesh {
        coords,
        elements,
        node_sets,
        facet_sets,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_cube() {
        let mesh = build_structured_cube(1);
        assert_eq!(mesh.n_nodes(), 8);
        assert_eq!(mesh.n_elements(), 1);
    }

    #[test]
    fn two_by_two_cube() {
        let mesh = build_structured_cube(2);
        assert_eq!(mesh.n_nodes(), 27);
        assert_eq!(mesh.n_elements(), 8);
    }

    #[test]
    fn ten_cube_dof_count() {
        let mesh = build_structured_cube(10);
        assert_eq!(mesh.n_nodes(), 1331);
        assert_eq!(3 * mesh.n_nodes(), 3993);
        assert_eq!(mesh.n_elements(), 1000);
        assert_eq!(mesh.node_set("xmin").unwrap().len(), 121);
    }

    #[test]
    fn text_round_trip() {
        let mesh = build_structured_cube(2);
        let text = mesh.to_text();
        let back = Mesh::from_text(&text).unwrap();
        assert_eq!(back.coords, mesh.coords);
        assert_eq!(back.elements, mesh.elements);
        assert_eq!(back.node_sets, mesh.node_sets);
        assert_eq!(back.facet_sets, mesh.facet_sets);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = Mesh::from_text("nodes 1\n0 0 zero\n").unwrap_err();
        match err {
            FeError::MeshParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }

        let err = Mesh::from_text("vertices 3\n").unwrap_err();
        assert!(matches!(err, FeError::MeshParse { line: 1, .. }));

        // Out-of-range connectivity is caught by validation.
        let err = Mesh::from_text(
            "nodes 2\n0 0 0\n1 0 0\nelements 1\n0 1 2 3 4 5 6 7\n",
        )
        .unwrap_err();
        assert!(matches!(err, FeError::MeshInvalid(_)));
    }
}
