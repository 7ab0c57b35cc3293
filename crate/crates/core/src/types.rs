//! Identifier newtypes shared by every subsystem.

use std::fmt;

/// Simulated time and durations, in integer microseconds.
pub type Micros = u64;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                $name(v)
            }
        }
    };
}

id_type!(
    /// Dense catalog index of a cacheable object.
    ObjectId
);
id_type!(
    /// A mobile client attached to the cloudlet.
    ClientId
);
id_type!(
    /// A cache-bearing VM inside the cloudlet.
    NodeId
);
