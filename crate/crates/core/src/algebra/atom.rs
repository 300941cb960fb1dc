use std::fmt;

/// The five coordinates of the third jet space, in their fixed order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    X,
    U,
    P,
    Q,
    R,
}

impl Coord {
    pub const ALL: [Coord; 5] = [Coord::X, Coord::U, Coord::P, Coord::Q, Coord::R];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn atom(self) -> Atom {
        match self {
            Coord::X => Atom::X,
            Coord::U => Atom::U,
            Coord::P => Atom::P,
            Coord::Q => Atom::Q,
            Coord::R => Atom::R,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Coord::X => "x",
            Coord::U => "u",
            Coord::P => "p",
            Coord::Q => "q",
            Coord::R => "r",
        }
    }
}

/// A symbol of the fixed atom vocabulary.
///
/// The derived ordering is the canonical one used everywhere:
/// `x < u < p < q < r < f0 < f0' < ... < f3^(k) < a1 < ... < a6 < F < F_x < ... < F_r`.
/// Coefficient atoms are ordered by index first, then derivative order.
///
/// `Func` and `FuncPartial` form a formal generic function `F` on the jet space
/// together with its first partials; they exist so that coframe derivative
/// operators can be read off as linear combinations of `F_x, ..., F_r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    X,
    U,
    P,
    Q,
    R,
    /// `f_index^(order)`: the `order`-th derivative of the operator coefficient `f_index`.
    Coef { index: u8, order: u8 },
    /// Structure-group parameter `a_j`, `j` in `1..=6`.
    Group(u8),
    Func,
    FuncPartial(Coord),
}

impl Atom {
    pub fn coef(index: u8, order: u8) -> Atom {
        debug_assert!(index <= 3);
        Atom::Coef { index, order }
    }

    pub fn group(j: u8) -> Atom {
        debug_assert!((1..=6).contains(&j));
        Atom::Group(j)
    }

    pub fn is_group(self) -> bool {
        matches!(self, Atom::Group(_))
    }

    pub fn is_jet(self) -> bool {
        matches!(self, Atom::X | Atom::U | Atom::P | Atom::Q | Atom::R)
    }

    pub fn coord(self) -> Option<Coord> {
        match self {
            Atom::X => Some(Coord::X),
            Atom::U => Some(Coord::U),
            Atom::P => Some(Coord::P),
            Atom::Q => Some(Coord::Q),
            Atom::R => Some(Coord::R),
            _ => None,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Atom::X => f.write_str("x"),
            Atom::U => f.write_str("u"),
            Atom::P => f.write_str("p"),
            Atom::Q => f.write_str("q"),
            Atom::R => f.write_str("r"),
            Atom::Coef { index, order } => {
                write!(f, "f{index}")?;
                if order <= 3 {
                    for _ in 0..order {
                        f.write_str("'")?;
                    }
                    Ok(())
                } else {
                    write!(f, "_{order}")
                }
            }
            Atom::Group(j) => write!(f, "a{j}"),
            Atom::Func => f.write_str("F"),
            Atom::FuncPartial(c) => write!(f, "F_{}", c.name()),
        }
    }
}
