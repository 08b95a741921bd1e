use cliffdual_core::decompose::*;

#[test]
fn smoke_frame_and_pipeline() {
    let frame = t5_frame(2);
    let (rank, how) = code_span_certificate(&frame);
    println!("rank {rank} via {how}");
    assert_eq!(rank, 316);
    let spec = q_span_spectrum(&frame);
    println!("adj spectrum [{}, {}] -> Q [{}, {}]", spec.adj_min, spec.adj_max, spec.lo, spec.hi);
    let eps = epsilon_bound(2);
    println!("epsilon(2) = {eps}");

    let t0 = std::time::Instant::now();
    let pipe = t5_pipeline(2);
    println!("pipeline build: {:?}", t0.elapsed());
    println!("dims5 {:?}", pipe.dims5);
    println!("rank5 dims {:?}", pipe.rank5_dims);
    println!("code dims {:?}", pipe.code_dims);

    let t1 = std::time::Instant::now();
    let checks = t5_projector_suite_rat(&pipe, 41);
    println!("projector suite: {checks} checks in {:?}", t1.elapsed());

    let t2 = std::time::Instant::now();
    let pairs = t5_delta_commutation_rat(&pipe, 42);
    println!("commutation: {pairs} pairs in {:?}", t2.elapsed());
}

#[test]
fn smoke_layers() {
    let l = build_layers(3, 0, 2);
    let checks = layer_commutation_suite(&l);
    println!("layer suite (3,0,2): {checks} checks");
    let l2 = build_layers(2, 1, 3);
    let checks2 = layer_commutation_suite(&l2);
    println!("layer suite (2,1,3): {checks2} checks");
    assert!(exact_duality_check(3, 2));
    assert!(exact_duality_check(5, 3));
    assert!(!exact_duality_check(7, 3));
}
