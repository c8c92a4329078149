//! Build populations by hand and with the K = N/25 generator, then inspect their
//! neighborhood structure.

use gbeta::diagnostics::{check_assumption_b, SubpopGraph};
use gbeta::experiment::generate_population_paper;
use gbeta::Population;

fn main() -> gbeta::Result<()> {
    // Four subpopulations in a path: {1,2,3}, {3,4}, {4,5}, {5,6,7} (0-based below).
    let pop = Population::new(&[vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![4, 5, 6]], 7)?;
    for i in 0..pop.n_nodes() {
        let nb: Vec<usize> = pop.neighborhood(i).iter().map(|v| v + 1).collect();
        println!("N_{} = {:?}", i + 1, nb);
    }
    println!(
        "N_1 ∩ N_2 = {:?}",
        pop.intersection(0, 1)
            .iter()
            .map(|v| v + 1)
            .collect::<Vec<_>>()
    );
    println!("N_2 ∩ N_5 = {:?}", pop.intersection(1, 4));
    println!(
        "D = {}, every subpopulation has >= 3 nodes: {}",
        pop.max_neighborhood(),
        pop.assumption_min3()
    );

    let generated = generate_population_paper(250, 42)?;
    let sizes: Vec<usize> = generated.subpops().iter().map(Vec::len).collect();
    println!(
        "\ngenerated N = 250: K = {}, sizes {:?}",
        generated.n_subpops(),
        sizes
    );
    let sg = SubpopGraph::new(&generated);
    let b = check_assumption_b(&sg, generated.max_neighborhood(), None);
    println!(
        "subpopulation graph: {} edges, tree: {}, largest layer sizes {:?}",
        sg.n_edges(),
        b.b2.tree,
        b.max_layer_sizes
    );
    println!(
        "{}",
        serde_json::to_string(&Population::chain(3, 3).to_json())?
    );
    Ok(())
}
