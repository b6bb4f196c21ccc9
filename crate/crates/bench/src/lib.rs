//! Benchmark inputs shared by the criterion targets.

pub const XAB_ABX: &str = "vars: x; eq: x a b = a b x;";
pub const CONJUGATES: &str = "vars: x y z; eq: x y = y z; len: |x| = 3 && |y| = 9;";
pub const SHIFTED: &str = "vars: x y z; eq: x a b y = y z; len: |z| = |x| + 2 && |x| <= 3;";
pub const NON_PRESBURGER: &str = "vars: x y z; eq: x z = z y; re: x in /#(a|b)*/; re: y in /#(a|b)*/; len: |x| = 3 && |z| = 9;";
