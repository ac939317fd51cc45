//! SPARQL subset: basic graph patterns, COUNT, GROUP BY, HAVING, ORDER BY.

mod analyses;
mod ast;
mod exec;
mod parser;

pub use analyses::{
    availability_trend, mentions_per_year, successor_analysis, year_of, SOFTWARE_PER_YEAR,
};
pub use ast::{
    CmpOp, Count, Having, OrderExpr, OrderKey, PatternTerm, QueryAst, SelectItem, TriplePattern,
};
pub use exec::{cmp_rows, cmp_terms, execute, ResultTable};
pub use parser::parse_query;
