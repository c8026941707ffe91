//! Holds the `acceptance` test target; there is no library code.
