fn main() {
    println!("critnls");
}
