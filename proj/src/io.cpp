#include "mmbm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mmbm {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

MmbmModel parse_model_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SolverError(ErrorCode::BadInput, std::string("model JSON parse error: ") + e.what());
    }

    MmbmModel model;
    try {
        const auto& q = doc.at("Q");
        const int m = static_cast<int>(q.size());
        if (m == 0) throw SolverError(ErrorCode::BadInput, "Q is empty");
        model.m = m;
        model.Q = Matrix(m, m);
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(q.at(i).size()) != m) {
                throw SolverError(ErrorCode::BadInput, "Q is not square");
            }
            for (int j = 0; j < m; ++j) model.Q(i, j) = q.at(i).at(j).get<double>();
        }
        const auto& mu = doc.at("mu");
        const auto& s2 = doc.at("sigma2");
        if (static_cast<int>(mu.size()) != m || static_cast<int>(s2.size()) != m) {
            throw SolverError(ErrorCode::BadInput, "mu/sigma2 lengths disagree with Q");
        }
        model.mu = Vector(m);
        model.sigma2 = Vector(m);
        for (int i = 0; i < m; ++i) {
            model.mu(i) = mu.at(i).get<double>();
            model.sigma2(i) = s2.at(i).get<double>();
        }
        model.b = doc.at("b").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw SolverError(ErrorCode::BadInput, std::string("model JSON schema error: ") + e.what());
    }
    return validate_model(model);
}

MmbmModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SolverError(ErrorCode::BadInput, "cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model_json(ss.str());
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SolverError(ErrorCode::BadInput, "cannot write file: " + path);
    out << text;
}

void write_density_csv(const std::string& path, const std::vector<double>& xs,
                       const Matrix& values) {
    std::ostringstream out;
    out << "x";
    for (int i = 0; i < values.cols(); ++i) out << ",phase_" << (i + 1);
    out << "\n";
    for (size_t r = 0; r < xs.size(); ++r) {
        out << fmt17(xs[r]);
        for (int i = 0; i < values.cols(); ++i) out << "," << fmt17(values(static_cast<int>(r), i));
        out << "\n";
    }
    write_text_file(path, out.str());
}

void write_histogram_csv(const std::string& path, const EmpiricalLaw& law) {
    std::ostringstream out;
    out << "bin_left,bin_right";
    for (int i = 0; i < law.num_phases; ++i) out << ",phase_" << (i + 1);
    out << "\n";
    for (int k = 0; k < law.bins(); ++k) {
        out << fmt17(law.bin_left(k)) << "," << fmt17(law.bin_right(k));
        for (int i = 0; i < law.num_phases; ++i) out << "," << fmt17(law.hist(k, i));
        out << "\n";
    }
    write_text_file(path, out.str());
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
    std::ostringstream out;
    out << "eps,distance,mass0,massb,cond_N\n";
    for (const auto& p : report.points) {
        out << fmt17(p.eps) << "," << fmt17(p.distance) << "," << fmt17(p.mass0) << ","
            << fmt17(p.massb) << "," << fmt17(p.cond_N) << "\n";
    }
    write_text_file(path, out.str());
}

}  // namespace mmbm
