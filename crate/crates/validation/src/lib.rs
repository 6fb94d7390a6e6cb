//! Holds the `acceptance` test target, which reruns the headline results of
//! the purification library and prints one PASS or FAIL line per result.
//! It lives in its own package so that it runs after every other test.
