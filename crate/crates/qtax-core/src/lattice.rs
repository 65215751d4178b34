//! Discrete 1+1 dimensional spacetime: sites, regions, light cones and the
//! shielding surfaces used by the screening checkers.

use std::collections::BTreeSet;
use std::fmt;

/// One lattice point. Ordering is lexicographic by `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Site {
    pub x: i64,
    pub t: i64,
}

impl Site {
    pub fn new(x: i64, t: i64) -> Self {
        Site { x, t }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.t)
    }
}

/// A finite set of sites.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Region(pub BTreeSet<Site>);

impl Region {
    pub fn new() -> Self {
        Region(BTreeSet::new())
    }

    pub fn single(x: i64, t: i64) -> Self {
        let mut s = BTreeSet::new();
        s.insert(Site::new(x, t));
        Region(s)
    }

    pub fn from_sites(sites: impl IntoIterator<Item = Site>) -> Self {
        Region(sites.into_iter().collect())
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.0.contains(s)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Site> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn union(&self, other: &Region) -> Region {
        Region(self.0.union(&other.0).copied().collect())
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region(self.0.intersection(&other.0).copied().collect())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region(self.0.difference(&other.0).copied().collect())
    }

    /// Earliest time over the region's sites.
    pub fn t_min(&self) -> Option<i64> {
        self.0.iter().map(|s| s.t).min()
    }

    /// Latest time over the region's sites.
    pub fn t_max(&self) -> Option<i64> {
        self.0.iter().map(|s| s.t).max()
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

/// Temporal orientation of a lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arrow {
    /// Increasing `t` is the future.
    Forward,
    /// No orientation: past and future cones are undefined.
    None,
}

/// Which part of a light cone to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConePart {
    Full,
    Past,
    Future,
}

/// Bounded 1+1 dimensional lattice with a causal speed limit.
///
/// `c` is the maximum signal speed: site `(x', t')` is inside the cone of
/// `(x, t)` when `|x' - x| <= c * |t' - t|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    pub x_min: i64,
    pub x_max: i64,
    pub t_min: i64,
    pub t_max: i64,
    pub c: i64,
    pub arrow: Arrow,
}

impl Lattice {
    pub fn contains(&self, s: &Site) -> bool {
        s.x >= self.x_min && s.x <= self.x_max && s.t >= self.t_min && s.t <= self.t_max
    }

    /// Every site of the lattice, in `(x, t)` order.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::new();
        for x in self.x_min..=self.x_max {
            for t in self.t_min..=self.t_max {
                out.push(Site::new(x, t));
            }
        }
        out
    }

    /// Light cone of a region, clipped to the lattice.
    ///
    /// Returns `None` when a past or future cone is requested on a lattice
    /// with no arrow of time; the full cone is always defined.
    pub fn lightcone(&self, region: &Region, part: ConePart) -> Option<Region> {
        if self.arrow == Arrow::None && part != ConePart::Full {
            return None;
        }
        let mut out = BTreeSet::new();
        for site in self.sites() {
            if region.iter().any(|a| self.in_cone_of(&site, a, part)) {
                out.insert(site);
            }
        }
        Some(Region(out))
    }

    fn in_cone_of(&self, s: &Site, apex: &Site, part: ConePart) -> bool {
        let dt = s.t - apex.t;
        let dx = (s.x - apex.x).abs();
        match part {
            ConePart::Full => dx <= self.c * dt.abs(),
            ConePart::Past => dt <= 0 && dx <= self.c * (-dt),
            ConePart::Future => dt >= 0 && dx <= self.c * dt,
        }
    }

    /// `true` when every site of `a` is spacelike from every site of `b`.
    pub fn spacelike_separated(&self, a: &Region, b: &Region) -> bool {
        a.iter().all(|sa| {
            b.iter()
                .all(|sb| (sa.x - sb.x).abs() > self.c * (sa.t - sb.t).abs())
        })
    }

    /// All shielding surfaces for `(a, b)`: axis-aligned rectangles `R`
    /// within the lattice with `a` inside the open interior of `R` and `b`
    /// disjoint from all of `R`. The surface itself is the rectangle's
    /// boundary ring.
    ///
    /// Results are ordered lexicographically by `(x_lo, t_lo, x_hi, t_hi)`.
    pub fn shielding_surfaces(&self, a: &Region, b: &Region) -> Vec<Shell> {
        let mut out = Vec::new();
        let (Some(ax_lo), Some(ax_hi)) = (
            a.iter().map(|s| s.x).min(),
            a.iter().map(|s| s.x).max(),
        ) else {
            return out;
        };
        let (at_lo, at_hi) = (
            a.iter().map(|s| s.t).min().unwrap(),
            a.iter().map(|s| s.t).max().unwrap(),
        );
        for x_lo in self.x_min..=(ax_lo - 1) {
            for t_lo in self.t_min..=(at_lo - 1) {
                for x_hi in (ax_hi + 1)..=self.x_max {
                    for t_hi in (at_hi + 1)..=self.t_max {
                        let hit_b = b.iter().any(|s| {
                            s.x >= x_lo && s.x <= x_hi && s.t >= t_lo && s.t <= t_hi
                        });
                        if hit_b {
                            continue;
                        }
                        out.push(Shell::new(x_lo, t_lo, x_hi, t_hi));
                    }
                }
            }
        }
        out
    }
}

/// The boundary ring of an axis-aligned rectangle, used as a screening
/// surface between an output region and the rest of the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shell {
    pub x_lo: i64,
    pub t_lo: i64,
    pub x_hi: i64,
    pub t_hi: i64,
    /// The ring's sites: rectangle minus its open interior.
    pub sites: Region,
}

impl Shell {
    pub fn new(x_lo: i64, t_lo: i64, x_hi: i64, t_hi: i64) -> Self {
        let mut sites = BTreeSet::new();
        for x in x_lo..=x_hi {
            for t in t_lo..=t_hi {
                if x == x_lo || x == x_hi || t == t_lo || t == t_hi {
                    sites.insert(Site::new(x, t));
                }
            }
        }
        Shell {
            x_lo,
            t_lo,
            x_hi,
            t_hi,
            sites: Region(sites),
        }
    }
}

impl fmt::Display for Shell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{},{}]x[{},{}]",
            self.x_lo, self.x_hi, self.t_lo, self.t_hi
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat() -> Lattice {
        Lattice {
            x_min: -3,
            x_max: 3,
            t_min: -1,
            t_max: 3,
            c: 1,
            arrow: Arrow::Forward,
        }
    }

    #[test]
    fn past_cone_of_origin() {
        let l = lat();
        let cone = l.lightcone(&Region::single(0, 0), ConePart::Past).unwrap();
        let expect = Region::from_sites([
            Site::new(-1, -1),
            Site::new(0, -1),
            Site::new(0, 0),
            Site::new(1, -1),
        ]);
        assert_eq!(cone, expect);
    }

    #[test]
    fn no_arrow_has_no_past() {
        let mut l = lat();
        l.arrow = Arrow::None;
        assert!(l.lightcone(&Region::single(0, 0), ConePart::Past).is_none());
        assert!(l.lightcone(&Region::single(0, 0), ConePart::Full).is_some());
    }

    #[test]
    fn spacelike_pairs() {
        let l = lat();
        assert!(l.spacelike_separated(&Region::single(-2, 2), &Region::single(2, 1)));
        assert!(!l.spacelike_separated(&Region::single(0, 0), &Region::single(1, 1)));
        assert!(!l.spacelike_separated(&Region::single(0, 0), &Region::single(1, -1)));
    }

    #[test]
    fn shell_ring_sites() {
        let s = Shell::new(0, 0, 3, 3);
        assert_eq!(s.sites.len(), 12);
        assert!(s.sites.contains(&Site::new(0, 0)));
        assert!(s.sites.contains(&Site::new(3, 3)));
        assert!(s.sites.contains(&Site::new(0, 2)));
        assert!(!s.sites.contains(&Site::new(1, 1)));
        assert!(!s.sites.contains(&Site::new(2, 2)));
    }

    #[test]
    fn degenerate_shell_is_all_boundary() {
        let s = Shell::new(0, 0, 1, 3);
        assert_eq!(s.sites.len(), 8);
    }

    #[test]
    fn shielding_surfaces_around_left_detector() {
        // Output at (-2,2), excluded region at (2,1): x_lo pinned to -3 and
        // t_hi pinned to 3, x_hi in {-1,0,1}, t_lo in {-1,0,1}.
        let l = lat();
        let a = Region::single(-2, 2);
        let b = Region::single(2, 1);
        let shells = l.shielding_surfaces(&a, &b);
        assert_eq!(shells.len(), 9);
        let first = &shells[0];
        assert_eq!((first.x_lo, first.t_lo, first.x_hi, first.t_hi), (-3, -1, -1, 3));
        for s in &shells {
            assert_eq!(s.x_lo, -3);
            assert_eq!(s.t_hi, 3);
            assert!(s.x_hi >= -1 && s.x_hi <= 1);
            assert!(s.t_lo >= -1 && s.t_lo <= 1);
        }
    }

    #[test]
    fn no_surface_between_adjacent_sites() {
        // b sits directly above a: every rectangle with a in its interior
        // contains b, so no shielding surface exists.
        let l = lat();
        let a = Region::single(0, 1);
        let b = Region::single(0, 2);
        assert!(l.shielding_surfaces(&a, &b).is_empty());
    }

    #[test]
    fn cone_composition() {
        // Past and future cones are idempotent; the full cone only grows.
        let l = lat();
        for part in [ConePart::Past, ConePart::Future] {
            let c1 = l.lightcone(&Region::single(1, 1), part).unwrap();
            let c2 = l.lightcone(&c1, part).unwrap();
            assert_eq!(c1, c2);
        }
        let f1 = l.lightcone(&Region::single(1, 1), ConePart::Full).unwrap();
        let f2 = l.lightcone(&f1, ConePart::Full).unwrap();
        assert!(f1.is_subset(&f2));
    }
}
