//! Cell-site geometry.
//!
//! Sites sit on a regular grid, one per grid cell, with the site at the
//! centre of its square so each UE-placement disc of radius `pitch / 2`
//! stays inside the derived area. Sites are grouped three per DU under a
//! single CU; the grouping is metadata and does not enter any radio or
//! power computation.

use crate::error::{Error, Result};

/// Number of RUs hosted by one DU.
pub const RUS_PER_DU: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance_squared(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Point) -> f64 {
        self.distance_squared(other).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSite {
    pub id: usize,
    pub position: Point,
    pub du_id: usize,
    pub cu_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkLayout {
    sites: Vec<CellSite>,
    neighbor_count: usize,
    neighbors: Vec<Vec<usize>>,
    area: (f64, f64),
    inter_site_distance: f64,
}

impl NetworkLayout {
    /// Builds a `rows × cols` grid with the given pitch.
    ///
    /// Neighbor lists hold the `min(neighbor_count, K - 1)` nearest other
    /// sites, sorted by distance and then by id.
    pub fn grid(
        rows: usize,
        cols: usize,
        inter_site_distance: f64,
        neighbor_count: usize,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::config(
                "topology.rows",
                format!("grid {rows}x{cols} must hold at least two sites"),
            ));
        }
        if !(inter_site_distance > 0.0) || !inter_site_distance.is_finite() {
            return Err(Error::config(
                "topology.inter_site_distance",
                format!("must be positive, got {inter_site_distance}"),
            ));
        }
        if neighbor_count == 0 {
            return Err(Error::config("topology.neighbors", "must be at least 1"));
        }

        let sites = (0..rows * cols)
            .map(|id| {
                let (r, c) = (id / cols, id % cols);
                CellSite {
                    id,
                    position: Point::new(
                        (c as f64 + 0.5) * inter_site_distance,
                        (r as f64 + 0.5) * inter_site_distance,
                    ),
                    du_id: id / RUS_PER_DU,
                    cu_id: 0,
                }
            })
            .collect();
        let area = (
            cols as f64 * inter_site_distance,
            rows as f64 * inter_site_distance,
        );
        Ok(Self::from_sites(sites, neighbor_count, area, inter_site_distance))
    }

    /// Builds a layout from explicit sites. Ids are reassigned to match order.
    pub fn from_sites(
        mut sites: Vec<CellSite>,
        neighbor_count: usize,
        area: (f64, f64),
        inter_site_distance: f64,
    ) -> Self {
        for (id, site) in sites.iter_mut().enumerate() {
            site.id = id;
        }
        let take = neighbor_count.min(sites.len().saturating_sub(1));
        let neighbors = sites
            .iter()
            .map(|site| {
                let mut others: Vec<(f64, usize)> = sites
                    .iter()
                    .filter(|o| o.id != site.id)
                    .map(|o| (site.position.distance(o.position), o.id))
                    .collect();
                others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                others.into_iter().take(take).map(|(_, id)| id).collect()
            })
            .collect();
        NetworkLayout {
            sites,
            neighbor_count: take,
            neighbors,
            area,
            inter_site_distance,
        }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[CellSite] {
        &self.sites
    }

    pub fn site(&self, cell: usize) -> Result<&CellSite> {
        self.sites.get(cell).ok_or(Error::InvalidCell {
            index: cell,
            count: self.sites.len(),
        })
    }

    /// Effective neighbor count, already clamped to `K - 1`.
    pub fn neighbor_count(&self) -> usize {
        self.neighbor_count
    }

    pub fn neighbors(&self, cell: usize) -> Result<&[usize]> {
        self.site(cell)?;
        Ok(&self.neighbors[cell])
    }

    pub fn area(&self) -> (f64, f64) {
        self.area
    }

    pub fn inter_site_distance(&self) -> f64 {
        self.inter_site_distance
    }

    /// Euclidean distance from a site to a point, in meters.
    pub fn distance(&self, cell: usize, point: Point) -> Result<f64> {
        Ok(self.site(cell)?.position.distance(point))
    }
}
