use cliffdual_core::decompose::*;

#[test]
fn smoke_pipeline_n3() {
    let t0 = std::time::Instant::now();
    let pipe = t5_pipeline(3);
    println!("pipeline build n=3: {:?}", t0.elapsed());
    println!("rank {} of {}", pipe.span_rank, 5 * 8usize.pow(3));
    println!("rank5 dims {:?}", pipe.rank5_dims);
    println!("code dims {:?}", pipe.code_dims);
    assert_eq!(pipe.span_rank, 5 * 512);

    let t1 = std::time::Instant::now();
    let checks = t5_projector_suite_f64(&pipe, 43, 1e-9);
    println!("projector suite f64: {checks} checks in {:?}", t1.elapsed());

    let t2 = std::time::Instant::now();
    let pairs = t5_delta_commutation_f64(&pipe, 44, 1e-9);
    println!("commutation f64: {pairs} pairs in {:?}", t2.elapsed());
}
