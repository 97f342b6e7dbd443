//! Quadratic sections and their standard forms.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geq::{format_item_word, inverse_item_word, Base, GenEq, ItemWord};

/// Standard form of the relation read off a quadratic section.
#[derive(Clone, Debug, Serialize)]
pub struct QuadraticForm {
    pub section: (usize, usize),
    pub orientable: bool,
    /// `n`: number of commutators, or of squares when non-orientable.
    pub genus: usize,
    /// `m`: number of conjugated coefficients besides `d`.
    pub coefficients: usize,
    pub boundary_components: usize,
    pub euler_characteristic: i64,
    /// Boundary words of the 2-cells; `∂` marks a boundary side.
    pub cells: Vec<String>,
    /// Quadratic pairs, named by their representative base.
    pub variables: Vec<String>,
    pub coefficient_bases: Vec<String>,
    /// Each coefficient base with its value over the items outside the section.
    pub coefficient_words: Vec<(String, String)>,
    /// `|X|`, `|T|` and `κ = |X| + 1`.
    pub x_count: usize,
    pub t_count: usize,
    pub kappa: usize,
    pub regular: bool,
    /// The QH vertex presentation when regular.
    pub qh_presentation: Option<String>,
}

impl QuadraticForm {
    /// The standard relation, e.g. `[x1,y1][x2,y2] z1^-1 c1 z1 d`.
    pub fn standard_relation(&self) -> String {
        let mut parts = Vec::new();
        for i in 1..=self.genus {
            if self.orientable {
                parts.push(format!("[x{i},y{i}]"));
            } else {
                parts.push(format!("x{i}^2"));
            }
        }
        for i in 1..=self.coefficients {
            parts.push(format!("z{i}^-1 c{i} z{i}"));
        }
        if self.boundary_components > 0 {
            parts.push("d".into());
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }

    fn presentation(&self) -> String {
        let mut gens = Vec::new();
        let mut rel = Vec::new();
        for i in 1..=self.genus {
            if self.orientable {
                gens.push(format!("x{i}"));
                gens.push(format!("y{i}"));
                rel.push(format!("[x{i},y{i}]"));
            } else {
                gens.push(format!("x{i}"));
                rel.push(format!("x{i}^2"));
            }
        }
        for i in 1..=self.boundary_components {
            gens.push(format!("p{i}"));
            rel.push(format!("p{i}"));
        }
        format!("< {} | {} >", gens.join(", "), rel.join(" "))
    }
}

fn inside<'a>(g: &'a GenEq, a: usize, b: usize) -> Vec<&'a Base> {
    g.bases.iter().filter(|m| a <= m.left() && m.right() <= b).collect()
}

/// Whether `[a, b]` is closed and every item in it is covered exactly twice
/// by bases of the interval, with at least one quadratic pair.
pub fn is_quadratic_section(g: &GenEq, a: usize, b: usize) -> bool {
    if a >= b || b > g.rho + 1 || !g.is_closed(a) || !g.is_closed(b) {
        return false;
    }
    let bases = inside(g, a, b);
    let covered_twice = (a..b).all(|i| bases.iter().filter(|m| m.contains_item(i)).count() == 2);
    let paired = bases.iter().any(|m| bases.iter().any(|d| d.id == m.dual));
    covered_twice && paired
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }
    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// One 2-cell of the section surface: a cyclic word of items, closed by a
/// boundary side for a coefficient base.
fn face_word(g: &GenEq, m: &Base, ids: &BTreeSet<&str>) -> Result<(ItemWord, bool)> {
    if ids.contains(m.dual.as_str()) {
        let mut w = m.reading();
        w.extend(inverse_item_word(&g.dual_of(m)?.reading()));
        Ok((w, false))
    } else {
        Ok((m.reading(), true))
    }
}

/// Brings the quadratic system of the closed section `[a, b]` to standard
/// form through the invariants of the associated surface: items are edges,
/// each quadratic pair a 2-cell, each coefficient base a 2-cell with one
/// boundary side.
pub fn standard_form(g: &GenEq, section: (usize, usize)) -> Result<QuadraticForm> {
    let (a, b) = section;
    if !is_quadratic_section(g, a, b) {
        return Err(Error::Precondition(format!("[{a}, {b}] is not a quadratic section")));
    }
    let bases = inside(g, a, b);
    let ids: BTreeSet<&str> = bases.iter().map(|m| m.id.as_str()).collect();
    let mut variables = Vec::new();
    let mut coefficient_bases = Vec::new();
    let mut faces: Vec<(ItemWord, bool)> = Vec::new();
    for m in &bases {
        if ids.contains(m.dual.as_str()) {
            if m.id < m.dual {
                variables.push(m.id.clone());
                faces.push(face_word(g, m, &ids)?);
            }
        } else {
            coefficient_bases.push(m.id.clone());
            faces.push(face_word(g, m, &ids)?);
        }
    }

    // Vertex slots: 2(i − a) is the tail of h_i, 2(i − a) + 1 its head;
    // boundary side k has slots 2ρσ + 2k (tail) and 2ρσ + 2k + 1 (head).
    let items = b - a;
    let slot = |x: i32, head: bool| -> usize {
        let i = x.unsigned_abs() as usize - a;
        2 * i + usize::from(head == (x > 0))
    };
    let mut uf = UnionFind::new(2 * items + 2 * coefficient_bases.len());
    let mut boundary_sides = Vec::new();
    let mut occurrences: BTreeMap<usize, Vec<(usize, i8)>> = BTreeMap::new();
    for (f, (w, coefficient)) in faces.iter().enumerate() {
        for &x in w {
            occurrences.entry(x.unsigned_abs() as usize).or_default().push((f, x.signum() as i8));
        }
        let mut sides: Vec<(usize, usize)> = w.iter().map(|&x| (slot(x, false), slot(x, true))).collect();
        if *coefficient {
            let k = boundary_sides.len();
            let (t, h) = (2 * items + 2 * k, 2 * items + 2 * k + 1);
            boundary_sides.push((t, h));
            sides.push((h, t));
        }
        for s in 0..sides.len() {
            uf.union(sides[s].1, sides[(s + 1) % sides.len()].0);
        }
    }
    for i in a..b {
        let n = occurrences.get(&i).map_or(0, Vec::len);
        if n != 2 {
            return Err(Error::Structure(format!("h{i} occurs {n} times in the section cells")));
        }
    }
    let mut cf = UnionFind::new(faces.len());
    for occ in occurrences.values() {
        cf.union(occ[0].0, occ[1].0);
    }
    let components = (0..faces.len()).map(|f| cf.find(f)).collect::<BTreeSet<_>>().len();
    if components > 1 {
        return Err(Error::Structure(format!("[{a}, {b}] carries {components} separate surfaces")));
    }
    let vertices: BTreeSet<usize> = (0..2 * items + 2 * boundary_sides.len()).map(|s| uf.find(s)).collect();
    let v = vertices.len() as i64;
    let euler = v - (items + boundary_sides.len()) as i64 + faces.len() as i64;

    // Orient cells so that every item is crossed in opposite directions.
    let mut orient: Vec<Option<i8>> = vec![None; faces.len()];
    let mut orientable = true;
    for start in 0..faces.len() {
        if orient[start].is_some() {
            continue;
        }
        orient[start] = Some(1);
        let mut stack = vec![start];
        while let Some(f) = stack.pop() {
            for occ in occurrences.values() {
                let (p, q) = (occ[0], occ[1]);
                for (x, y) in [(p, q), (q, p)] {
                    if x.0 != f {
                        continue;
                    }
                    let want = -orient[f].unwrap() * x.1 * y.1;
                    match orient[y.0] {
                        None => {
                            orient[y.0] = Some(want);
                            stack.push(y.0);
                        }
                        Some(o) if o != want => orientable = false,
                        _ => {}
                    }
                }
            }
        }
    }

    let mut bf = UnionFind::new(2 * items + 2 * boundary_sides.len());
    let mut touched = BTreeSet::new();
    for &(t, h) in &boundary_sides {
        let (rt, rh) = (uf.find(t), uf.find(h));
        touched.insert(rt);
        touched.insert(rh);
        bf.union(rt, rh);
    }
    let boundary = touched.iter().map(|&x| bf.find(x)).collect::<BTreeSet<_>>().len();

    let deficit = 2 - boundary as i64 - euler;
    let genus = if orientable {
        if deficit < 0 || deficit % 2 != 0 {
            return Err(Error::Structure(format!("inconsistent surface: χ = {euler}, b = {boundary}")));
        }
        (deficit / 2) as usize
    } else {
        if deficit < 1 {
            return Err(Error::Structure(format!("inconsistent surface: χ = {euler}, b = {boundary}")));
        }
        deficit as usize
    };
    let m = boundary.saturating_sub(1);
    let x_count = if orientable { 2 * genus + m } else { genus + m };
    let t_count = (v - 1) as usize;
    let kappa = x_count + 1;
    let regular = kappa >= 4
        || (orientable && genus == 1 && m == 0 && boundary == 1)
        || (orientable && genus == 2 && m == 0 && boundary == 0);

    let coefficient_words = coefficient_bases
        .iter()
        .map(|id| {
            let d = g.base(id).and_then(|m| g.base(&m.dual)).expect("coefficient base with dual");
            (id.clone(), format_item_word(&d.reading()))
        })
        .collect();
    let cells = faces.iter().map(|(w, c)| format!("{}{}", format_item_word(w), if *c { " | ∂" } else { "" })).collect();

    let mut form = QuadraticForm {
        section,
        orientable,
        genus,
        coefficients: m,
        boundary_components: boundary,
        euler_characteristic: euler,
        cells,
        variables,
        coefficient_bases,
        coefficient_words,
        x_count,
        t_count,
        kappa,
        regular,
        qh_presentation: None,
    };
    if regular {
        form.qh_presentation = Some(form.presentation());
    }
    Ok(form)
}

/// Active sections that are quadratic.
pub fn quadratic_candidates(g: &GenEq) -> Vec<(usize, usize)> {
    g.sections
        .iter()
        .filter(|s| s.active && is_quadratic_section(g, s.start, s.end))
        .map(|s| (s.start, s.end))
        .collect()
}
