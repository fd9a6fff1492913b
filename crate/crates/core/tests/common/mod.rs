pub mod parser_cases;
