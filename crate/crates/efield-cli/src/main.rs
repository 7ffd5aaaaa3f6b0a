fn main() {
    println!("efield");
}
