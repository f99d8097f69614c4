// Pairs the members of two synthetic clusters without any cross-cluster map.

#include <iomanip>
#include <iostream>

#include "lsd/io/pipeline.hpp"

int main()
{
    using namespace lsd;
    const synthetic::Family fam = synthetic::two_cluster_family();
    std::vector<ShapeSpectra> spectra;
    std::vector<std::string> ids;
    std::vector<Vec> lambda;
    for (const auto& mesh : fam.meshes) {
        spectra.push_back(compute_spectra(mesh, mesh.num_vertices()));
        ids.push_back(mesh.shape_id);
        lambda.push_back(spectra.back().basis.eigenvalues);
    }
    std::vector<Vec> dnas;
    for (const auto& s : spectra) {
        dnas.push_back(shape_dna(s.basis).spectrum_prefix);
    }
    const Topology topo = build_topology(dnas, {TopologyKind::Clique, 10, {}});
    const Correspondence same = identity_correspondence(fam.meshes.front().num_vertices());
    const FMNetwork net = attach_maps(ids, lambda, topo, [&](int i, int j) {
        return fmap_from_correspondence(spectra[i], spectra[j], same);
    });
    const Index m = spectra.front().basis.k();
    const io::AlignResult r = io::align_clusters(net, fam.partition, m, {});
    int correct = 0;
    for (std::size_t i = 0; i < r.from.size(); ++i) {
        const std::string& truth = fam.meshes[static_cast<std::size_t>(fam.pairing[i].second)].shape_id;
        correct += r.to[i] == truth ? 1 : 0;
        std::cout << std::left << std::setw(8) << r.from[i] << " -> " << r.to[i]
                  << (r.to[i] == truth ? "" : "  (expected " + truth + ")") << "\n";
    }
    std::cout << correct << "/" << r.from.size() << " pairs recovered\n";
    return correct == static_cast<int>(r.from.size()) ? 0 : 1;
}
