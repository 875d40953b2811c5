use serde::{Deserialize, Serialize};

use super::NocError;

/// Router port indices. Ports 5..9 exist only on the express-link mesh.
pub const PORT_LOCAL: usize = 0;
pub const PORT_XP: usize = 1;
pub const PORT_XM: usize = 2;
pub const PORT_YP: usize = 3;
pub const PORT_YM: usize = 4;
pub const PORT_XP_EXPRESS: usize = 5;
pub const PORT_XM_EXPRESS: usize = 6;
pub const PORT_YP_EXPRESS: usize = 7;
pub const PORT_YM_EXPRESS: usize = 8;

/// Router ids are row-major: `id = y * width + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Topology {
    Mesh { width: u32, height: u32 },
    /// Mesh plus express links that skip `express_span - 1` routers.
    Cmesh { width: u32, height: u32, express_span: u32 },
}

impl Default for Topology {
    fn default() -> Self {
        Topology::Mesh { width: 4, height: 4 }
    }
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Topology::Mesh { width, height } => write!(f, "{width}x{height}"),
            Topology::Cmesh { width, height, express_span } => {
                write!(f, "cmesh-{width}x{height}-s{express_span}")
            }
        }
    }
}

impl Topology {
    pub fn mesh(width: u32, height: u32) -> Self {
        Topology::Mesh { width, height }
    }

    pub fn width(&self) -> u32 {
        match *self {
            Topology::Mesh { width, .. } | Topology::Cmesh { width, .. } => width,
        }
    }

    pub fn height(&self) -> u32 {
        match *self {
            Topology::Mesh { height, .. } | Topology::Cmesh { height, .. } => height,
        }
    }

    pub fn num_routers(&self) -> usize {
        self.width() as usize * self.height() as usize
    }

    pub fn port_count(&self) -> usize {
        match self {
            Topology::Mesh { .. } => 5,
            Topology::Cmesh { .. } => 9,
        }
    }

    fn span(&self) -> u32 {
        match *self {
            Topology::Mesh { .. } => 0,
            Topology::Cmesh { express_span, .. } => express_span,
        }
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.width() == 0 || self.height() == 0 {
            return Err("mesh dimensions must be positive".into());
        }
        if let Topology::Cmesh { express_span, .. } = *self {
            if express_span < 2 {
                return Err("express_span must be at least 2".into());
            }
        }
        Ok(())
    }

    pub fn coords(&self, id: usize) -> (u32, u32) {
        let w = self.width() as usize;
        ((id % w) as u32, (id / w) as u32)
    }

    pub fn id(&self, x: u32, y: u32) -> usize {
        y as usize * self.width() as usize + x as usize
    }

    pub fn check(&self, id: usize) -> Result<(), NocError> {
        if id >= self.num_routers() {
            return Err(NocError::RouterOutOfRange { router: id, routers: self.num_routers() });
        }
        Ok(())
    }

    /// Router reached by leaving `id` through `port`, if that link exists.
    pub fn neighbor(&self, id: usize, port: usize) -> Option<usize> {
        let (x, y) = self.coords(id);
        let (w, h, s) = (self.width(), self.height(), self.span());
        let (nx, ny) = match port {
            PORT_XP if x + 1 < w => (x + 1, y),
            PORT_XM if x >= 1 => (x - 1, y),
            PORT_YP if y + 1 < h => (x, y + 1),
            PORT_YM if y >= 1 => (x, y - 1),
            PORT_XP_EXPRESS if s > 0 && x + s < w => (x + s, y),
            PORT_XM_EXPRESS if s > 0 && x >= s => (x - s, y),
            PORT_YP_EXPRESS if s > 0 && y + s < h => (x, y + s),
            PORT_YM_EXPRESS if s > 0 && y >= s => (x, y - s),
            _ => return None,
        };
        Some(self.id(nx, ny))
    }

    /// Port on the far side of a link, i.e. the port a neighbour uses to
    /// send back.
    pub fn opposite(port: usize) -> usize {
        match port {
            PORT_XP => PORT_XM,
            PORT_XM => PORT_XP,
            PORT_YP => PORT_YM,
            PORT_YM => PORT_YP,
            PORT_XP_EXPRESS => PORT_XM_EXPRESS,
            PORT_XM_EXPRESS => PORT_XP_EXPRESS,
            PORT_YP_EXPRESS => PORT_YM_EXPRESS,
            PORT_YM_EXPRESS => PORT_YP_EXPRESS,
            p => p,
        }
    }

    /// Physical length of the link behind `port`, in unit mesh pitches.
    pub fn link_length(&self, port: usize) -> u32 {
        if port >= PORT_XP_EXPRESS {
            self.span()
        } else {
            1
        }
    }

    /// Dimension-ordered output port: all of X first, then Y. Express links
    /// are taken while the remaining offset is at least one span.
    pub fn next_port(&self, cur: usize, dst: usize) -> usize {
        let (cx, cy) = self.coords(cur);
        let (dx, dy) = self.coords(dst);
        let s = self.span();
        let pick = |c: u32, d: u32, plus: usize, minus: usize, xplus: usize, xminus: usize| {
            if d > c {
                if s > 0 && d - c >= s { xplus } else { plus }
            } else if s > 0 && c - d >= s {
                xminus
            } else {
                minus
            }
        };
        if cx != dx {
            pick(cx, dx, PORT_XP, PORT_XM, PORT_XP_EXPRESS, PORT_XM_EXPRESS)
        } else if cy != dy {
            pick(cy, dy, PORT_YP, PORT_YM, PORT_YP_EXPRESS, PORT_YM_EXPRESS)
        } else {
            PORT_LOCAL
        }
    }
}

/// Routers visited after `src` on the way to `dst`; empty when equal.
pub fn route_xy(src: usize, dst: usize, topology: &Topology) -> Result<Vec<usize>, NocError> {
    topology.check(src)?;
    topology.check(dst)?;
    let mut path = Vec::new();
    let mut cur = src;
    while cur != dst {
        let port = topology.next_port(cur, dst);
        cur = topology.neighbor(cur, port).expect("route stays inside the mesh");
        path.push(cur);
    }
    Ok(path)
}

/// Hop count and summed link length between two routers.
pub fn route_metrics(src: usize, dst: usize, topology: &Topology) -> (u64, u64) {
    let (mut hops, mut length, mut cur) = (0u64, 0u64, src);
    while cur != dst {
        let port = topology.next_port(cur, dst);
        length += u64::from(topology.link_length(port));
        hops += 1;
        cur = topology.neighbor(cur, port).expect("route stays inside the mesh");
    }
    (hops, length)
}
