fn main() { println!("heies"); }
