#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nmm/decoder.hpp"
#include "nmm/error.hpp"
#include "nmm/eval.hpp"
#include "nmm/pipeline.hpp"
#include "nmm/priors.hpp"
#include "nmm/synth.hpp"

namespace py = pybind11;
using namespace nmm;

namespace {

Graph graph_from_edges(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges) {
  Graph g(n);
  for (const auto& [a, b] : edges) {
    if (a != b && !g.has_edge(a, b)) g.add_edge(a, b);
  }
  return g;
}

std::vector<std::pair<NodeId, NodeId>> edge_pairs(const Graph& g) {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (const Edge& e : g.edges()) out.emplace_back(e.src, e.dst);
  return out;
}

py::dict graph_dict(const Graph& g) {
  py::dict d;
  d["num_nodes"] = g.num_nodes();
  d["edges"] = edge_pairs(g);
  d["labels"] = g.labels();
  return d;
}

Geometry make_geometry(const std::string& space, double radius) {
  Geometry g;
  g.radius = radius;
  if (space == "S/H") return g;
  if (space == "E/E") {
    g.hom = HomSpace::euclidean;
    g.rank = RankSpace::euclidean;
  } else if (space == "S/E") {
    g.rank = RankSpace::euclidean;
  } else if (space == "E/H") {
    g.hom = HomSpace::euclidean;
  } else {
    throw ContractViolation("space must be one of S/H, E/E, S/E, E/H");
  }
  return g;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-Euclidean mixture model for link prediction";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def("spherical_distance", [](const Vector& x, const Vector& y, double radius) {
    return spherical_distance(SphericalPoint::from_coords(x, radius), SphericalPoint::from_coords(y, radius));
  }, py::arg("x"), py::arg("y"), py::arg("radius") = 0.5);
  m.def("hyperbolic_distance", [](const Vector& x, const Vector& y) {
    return hyperbolic_distance(HyperbolicPoint::from_coords(x), HyperbolicPoint::from_coords(y));
  });
  m.def("exp0_hyperbolic", [](const Vector& v) {
    return exp_map_origin_hyperbolic({v, Space::hyperbolic}).coords();
  });
  m.def("log0_hyperbolic", [](const Vector& z) {
    return log_map_origin(HyperbolicPoint::from_coords(z)).coords;
  });
  m.def("exp0_spherical", [](const Vector& v, double radius) {
    return exp_map_origin_spherical({v, Space::spherical}, radius).coords();
  }, py::arg("v"), py::arg("radius") = 0.5);
  m.def("log0_spherical", [](const Vector& z, double radius) {
    return log_map_origin(SphericalPoint::from_coords(z, radius)).coords;
  }, py::arg("z"), py::arg("radius") = 0.5);
  m.def("log_normalizer", &log_normalizer, py::arg("zeta"), py::arg("d"));
  m.def("radial_normalizer", &radial_normalizer, py::arg("zeta"), py::arg("d"));

  m.def("p_link", [](double j, double b, double c, double d, double gamma, const Vector& xs,
                     const Vector& ys, const Vector& xh, const Vector& yh, double radius) {
    const MixtureParams p = MixtureParams::from_constrained(j, b, c, d, gamma);
    return p_link(p, SphericalPoint::from_coords(xs, radius), SphericalPoint::from_coords(ys, radius),
                  HyperbolicPoint::from_coords(xh), HyperbolicPoint::from_coords(yh));
  }, py::arg("J"), py::arg("B"), py::arg("C"), py::arg("D"), py::arg("gamma"), py::arg("xs"),
     py::arg("ys"), py::arg("xh"), py::arg("yh"), py::arg("radius") = 0.5);

  m.def("auc", &auc, py::arg("scores_pos"), py::arg("scores_neg"));

  m.def("gen_homophily", [](std::size_t n, int clusters, double p_in, double p_out, std::uint64_t seed) {
    return graph_dict(gen_homophily(n, clusters, p_in, p_out, seed));
  }, py::arg("n"), py::arg("clusters") = 4, py::arg("p_in") = 0.1, py::arg("p_out") = 0.005,
     py::arg("seed") = 0);
  m.def("gen_influence", [](std::size_t n, int attach_m, std::uint64_t seed) {
    return graph_dict(gen_influence(n, attach_m, seed));
  }, py::arg("n"), py::arg("attach_m") = 3, py::arg("seed") = 0);
  m.def("gen_mixed", [](std::size_t n, double mix, std::uint64_t seed) {
    return graph_dict(gen_mixed(n, mix, seed));
  }, py::arg("n"), py::arg("mix") = 0.5, py::arg("seed") = 0);

  m.def("train", [](std::size_t num_nodes, const std::vector<std::pair<NodeId, NodeId>>& edges,
                    const std::string& mode, int dim, const std::string& space, double radius,
                    double eta, double lambda_a, int epochs, std::size_t batch_size, int patience,
                    bool unify, std::optional<double> gamma_fixed, bool one_hot, bool inductive,
                    double node_frac, std::uint64_t seed) {
    TrainOptions t;
    t.model.mode = parse_mode(mode);
    t.model.geometry = make_geometry(space, radius);
    t.model.encoder.dim = dim;
    t.model.encoder.one_hot_inputs = one_hot;
    t.model.gamma_fixed = gamma_fixed;
    t.loss.lambda_a = lambda_a;
    t.loss.unify = unify;
    t.optim.eta = eta;
    t.optim.epochs = epochs;
    t.optim.batch_size = batch_size;
    t.optim.patience = patience;
    t.optim.seed = seed;
    t.inductive = inductive;
    t.node_frac = node_frac;

    const Graph g = graph_from_edges(num_nodes, edges);
    TrainOutput run;
    {
      py::gil_scoped_release release;
      run = run_training(g, t);
    }
    const Report r = evaluate(run.model, g, run.split, t.loss, seed);
    std::vector<double> l_s, l_h, l_unify;
    for (const EpochRecord& rec : run.result.trace) {
      l_s.push_back(rec.losses.l_s);
      l_h.push_back(rec.losses.l_h);
      l_unify.push_back(rec.losses.unify);
    }
    py::dict out;
    out["zs"] = run.model.zs;
    out["zh"] = run.model.zh;
    out["gamma"] = run.model.mixture.gamma();
    out["J"] = run.model.mixture.j();
    out["B"] = run.model.mixture.b();
    out["C"] = run.model.mixture.c();
    out["D"] = run.model.mixture.d();
    out["test_auc"] = r.auc;
    out["l_s"] = l_s;
    out["l_h"] = l_h;
    out["l_unify"] = l_unify;
    out["best_epoch"] = run.result.best_epoch;
    return out;
  }, py::arg("num_nodes"), py::arg("edges"), py::arg("mode") = "nmm", py::arg("dim") = 16,
     py::arg("space") = "S/H", py::arg("radius") = 0.5, py::arg("eta") = 0.05,
     py::arg("lambda_a") = 8.0, py::arg("epochs") = 200, py::arg("batch_size") = 0,
     py::arg("patience") = 20, py::arg("unify") = true, py::arg("gamma_fixed") = py::none(),
     py::arg("one_hot") = false, py::arg("inductive") = false, py::arg("node_frac") = 0.5,
     py::arg("seed") = 0);
}
