//! Walking geometry and its on-disk scenario format.

use std::fs;
use std::path::Path;

use glam::DVec2;
use serde::{Deserialize, Serialize};

use super::polygon::{Polygon, Rect, Segment};
use super::GeometryError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VertexList {
    vertices: Vec<[f64; 2]>,
}

/// Serialized form of a scenario.
///
/// ```toml
/// [bounds]
/// min = [0.0, 0.0]
/// max = [10.0, 10.0]
///
/// [origin]
/// vertices = [[0.5, 0.5], [2.0, 0.5], [2.0, 9.5], [0.5, 9.5]]
///
/// [destination]
/// vertices = [[8.0, 0.5], [9.5, 0.5], [9.5, 9.5], [8.0, 9.5]]
///
/// [[obstacles]]
/// vertices = [[4.0, 4.0], [6.0, 4.0], [6.0, 6.0], [4.0, 6.0]]
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
    pub bounds: Rect,
    origin: VertexList,
    destination: VertexList,
    #[serde(default)]
    obstacles: Vec<VertexList>,
    /// Route signatures in the order they should be numbered.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub route_order: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Origin,
    Destination,
}

impl std::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionKind::Origin => write!(f, "origin"),
            RegionKind::Destination => write!(f, "destination"),
        }
    }
}

/// The 2D walking environment. Immutable once validated.
#[derive(Debug, Clone)]
pub struct WalkingGeometry {
    pub name: String,
    pub bounds: Rect,
    pub obstacles: Vec<Polygon>,
    pub origin: Polygon,
    pub destination: Polygon,
    /// Signatures (as displayed, e.g. `"1R 4R"`) of the routes that take ids 1, 2, ...
    /// in this order. Unlisted routes follow, shortest first.
    pub route_order: Vec<String>,
}

impl WalkingGeometry {
    /// Builds and validates a geometry. Obstacles are re-oriented counter-clockwise.
    pub fn new(
        name: impl Into<String>,
        bounds: Rect,
        obstacles: Vec<Polygon>,
        origin: Polygon,
        destination: Polygon,
    ) -> Result<Self, GeometryError> {
        let ccw = |p: Polygon| {
            if p.signed_area() < 0.0 {
                Polygon::new(p.vertices().iter().rev().copied().collect())
            } else {
                p
            }
        };
        let geometry = Self {
            name: name.into(),
            bounds,
            obstacles: obstacles.into_iter().map(ccw).collect(),
            origin: ccw(origin),
            destination: ccw(destination),
            route_order: Vec::new(),
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn with_route_order(mut self, order: Vec<String>) -> Self {
        self.route_order = order;
        self
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let size = self.bounds.size();
        if !(size.x > 0.0 && size.y > 0.0) {
            return Err(GeometryError::EmptyBounds);
        }
        for (index, obstacle) in self.obstacles.iter().enumerate() {
            if !obstacle.is_simple() {
                return Err(GeometryError::NotSimple { index });
            }
        }
        for i in 0..self.obstacles.len() {
            for j in i + 1..self.obstacles.len() {
                if self.obstacles[i].overlaps(&self.obstacles[j]) {
                    return Err(GeometryError::Overlap { first: i, second: j });
                }
            }
        }
        for (kind, region) in [
            (RegionKind::Origin, &self.origin),
            (RegionKind::Destination, &self.destination),
        ] {
            if !region.is_simple() {
                return Err(GeometryError::RegionNotSimple { region: kind });
            }
            if region.vertices().iter().any(|v| !self.bounds.contains(*v)) {
                return Err(GeometryError::RegionOutsideBounds { region: kind });
            }
            for (index, obstacle) in self.obstacles.iter().enumerate() {
                if region.overlaps(obstacle) {
                    return Err(GeometryError::RegionIntersectsObstacle {
                        region: kind,
                        index,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_scenario(file: ScenarioFile) -> Result<Self, GeometryError> {
        Self::new(
            file.name.unwrap_or_else(|| "scenario".to_string()),
            file.bounds,
            file.obstacles
                .iter()
                .map(|o| Polygon::from_array(&o.vertices))
                .collect(),
            Polygon::from_array(&file.origin.vertices),
            Polygon::from_array(&file.destination.vertices),
        )
        .map(|g| g.with_route_order(file.route_order))
    }

    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))?;
        Self::from_scenario(file)
    }

    pub fn to_scenario(&self) -> ScenarioFile {
        let list = |p: &Polygon| VertexList {
            vertices: p.to_array(),
        };
        ScenarioFile {
            name: Some(self.name.clone()),
            note: None,
            bounds: self.bounds,
            origin: list(&self.origin),
            destination: list(&self.destination),
            obstacles: self.obstacles.iter().map(list).collect(),
            route_order: self.route_order.clone(),
        }
    }

    /// True if `p` lies inside the bounds and outside every obstacle.
    pub fn is_free(&self, p: DVec2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Every boundary segment that pedestrians can collide with.
    pub fn wall_segments(&self) -> Vec<Segment> {
        let mut out: Vec<Segment> = self.bounds.edges().to_vec();
        for o in &self.obstacles {
            out.extend(o.edges());
        }
        out
    }
}

/// Reads and validates a scenario file.
pub fn load_geometry(path: impl AsRef<Path>) -> Result<WalkingGeometry, GeometryError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    WalkingGeometry::parse(&text)
}

/// Dimensions of the two-wall, four-door layout.
///
/// Door widths and positions are a reconstruction: the room is 32 m x 12 m with two
/// 0.4 m thick walls, each holding one 2.0 m and one 1.0 m door on opposite sides.
#[derive(Debug, Clone, Copy)]
pub struct TwoWallLayout {
    pub length: f64,
    pub width: f64,
    pub wall_thickness: f64,
    pub first_wall_x: f64,
    pub second_wall_x: f64,
    /// (bottom, top) of the wide door in the first wall.
    pub first_wide: (f64, f64),
    /// (bottom, top) of the narrow door in the first wall.
    pub first_narrow: (f64, f64),
    pub second_wide: (f64, f64),
    pub second_narrow: (f64, f64),
}

impl Default for TwoWallLayout {
    fn default() -> Self {
        Self {
            length: 32.0,
            width: 12.0,
            wall_thickness: 0.4,
            first_wall_x: 11.0,
            second_wall_x: 20.6,
            first_wide: (8.0, 10.0),
            first_narrow: (2.0, 3.0),
            second_wide: (1.5, 3.5),
            second_narrow: (9.0, 10.0),
        }
    }
}

impl TwoWallLayout {
    pub fn build(&self) -> Result<WalkingGeometry, GeometryError> {
        let mut obstacles = Vec::new();
        let mut middles = Vec::new();
        for (x, a, b) in [
            (self.first_wall_x, self.first_wide, self.first_narrow),
            (self.second_wall_x, self.second_wide, self.second_narrow),
        ] {
            let mut doors = [a, b];
            doors.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut y = 0.0;
            for (k, (lo, hi)) in doors.iter().copied().chain(std::iter::once((self.width, self.width))).enumerate() {
                if lo > y {
                    if k == 1 {
                        middles.push(obstacles.len());
                    }
                    obstacles.push(Polygon::rectangle(
                        DVec2::new(x, y),
                        DVec2::new(x + self.wall_thickness, lo),
                    ));
                }
                y = hi;
            }
        }
        WalkingGeometry::new(
            "two walls, wide and narrow doors",
            Rect::new(DVec2::ZERO, DVec2::new(self.length, self.width)),
            obstacles,
            Polygon::rectangle(DVec2::new(1.0, 3.5), DVec2::new(5.0, 9.5)),
            Polygon::rectangle(DVec2::new(27.0, 3.5), DVec2::new(31.0, 9.5)),
        )
        .map(|g| g.with_route_order(self.route_order(&middles)))
    }

    /// Numbering of the four classes by door sequence: 1 wide then narrow, 2 narrow
    /// then narrow, 3 wide then wide, 4 narrow then wide.
    fn route_order(&self, middles: &[usize]) -> Vec<String> {
        let [a, b] = middles else {
            return Vec::new();
        };
        let first_wide_on_top = self.first_wide.0 > self.first_narrow.0;
        let second_wide_on_top = self.second_wide.0 > self.second_narrow.0;
        let over = |wide_on_top: bool, wide: bool| wide_on_top == wide;
        let sig = |w1: bool, w2: bool| {
            let mut parts = Vec::new();
            if over(first_wide_on_top, w1) {
                parts.push(format!("{a}R"));
            }
            if over(second_wide_on_top, w2) {
                parts.push(format!("{b}R"));
            }
            if parts.is_empty() { "-".to_string() } else { parts.join(" ") }
        };
        vec![sig(true, false), sig(false, false), sig(true, true), sig(false, true)]
    }
}
