#include "selectest/montecarlo.hpp"

namespace selectest {

const std::vector<ReferenceTable>& reference_tables() {
  // Published warp-speed rejection rates (999 replications).
  static const std::vector<ReferenceTable> tables{
      {"T1-caseI",
       "First test, design (i), oracle p",
       {"rho=0 c=3.5", "rho=0 c=4", "rho=0 c=4.5", "rho=0.25 c=3.5", "rho=0.25 c=4", "rho=0.25 c=4.5", "rho=0.5 c=3.5", "rho=0.5 c=4", "rho=0.5 c=4.5"},
       {1000, 2000},
       {0.05, 0.10},
       {0.071, 0.09, 0.08, 0.381, 0.393, 0.379, 0.888, 0.902, 0.892, 0.065, 0.06, 0.054, 0.631, 0.614, 0.517, 0.986, 0.986, 0.987, 0.143, 0.157, 0.147, 0.497, 0.517, 0.476, 0.94, 0.95, 0.937, 0.114, 0.108, 0.126, 0.762, 0.715, 0.679, 0.999, 0.995, 0.994}},
      {"T1-caseII",
       "First test, design (ii), oracle p",
       {"rho=0 c=3.5", "rho=0 c=4", "rho=0 c=4.5", "rho=0.25 c=3.5", "rho=0.25 c=4", "rho=0.25 c=4.5", "rho=0.5 c=3.5", "rho=0.5 c=4", "rho=0.5 c=4.5"},
       {1000, 2000},
       {0.05, 0.10},
       {0.076, 0.068, 0.066, 0.24, 0.243, 0.245, 0.652, 0.668, 0.654, 0.041, 0.049, 0.058, 0.388, 0.362, 0.341, 0.905, 0.898, 0.92, 0.13, 0.12, 0.112, 0.352, 0.377, 0.33, 0.784, 0.787, 0.771, 0.09, 0.101, 0.111, 0.505, 0.489, 0.443, 0.95, 0.951, 0.955}},
      {"T1-caseIII",
       "First test, design (iii), oracle p",
       {"rho=0 c=3.5", "rho=0 c=4", "rho=0 c=4.5", "rho=0.25 c=3.5", "rho=0.25 c=4", "rho=0.25 c=4.5", "rho=0.5 c=3.5", "rho=0.5 c=4", "rho=0.5 c=4.5"},
       {1000, 2000},
       {0.05, 0.10},
       {0.119, 0.099, 0.094, 0.338, 0.375, 0.338, 0.858, 0.902, 0.87, 0.086, 0.072, 0.065, 0.624, 0.55, 0.558, 0.994, 0.988, 0.992, 0.174, 0.162, 0.133, 0.492, 0.494, 0.478, 0.933, 0.942, 0.931, 0.141, 0.133, 0.149, 0.743, 0.696, 0.692, 0.997, 0.995, 0.997}},
      {"T1-caseIV",
       "First test, design (iv), oracle p",
       {"rho=0 c=3.5", "rho=0 c=4", "rho=0 c=4.5", "rho=0.25 c=3.5", "rho=0.25 c=4", "rho=0.25 c=4.5", "rho=0.5 c=3.5", "rho=0.5 c=4", "rho=0.5 c=4.5"},
       {1000, 2000},
       {0.05, 0.10},
       {0.083, 0.083, 0.077, 0.466, 0.421, 0.437, 0.937, 0.944, 0.931, 0.096, 0.092, 0.088, 0.683, 0.698, 0.663, 0.998, 0.996, 0.996, 0.152, 0.156, 0.135, 0.589, 0.528, 0.543, 0.968, 0.974, 0.968, 0.15, 0.154, 0.181, 0.794, 0.798, 0.778, 1.0, 0.999, 0.999}},
      {"T1-caseV",
       "First test, design (i), oracle p, cross-validated h_x",
       {"rho=0 cv", "rho=0.25 cv", "rho=0.5 cv"},
       {1000, 2000},
       {0.05, 0.10},
       {0.072, 0.331, 0.876, 0.045, 0.546, 0.989, 0.123, 0.482, 0.93, 0.111, 0.686, 0.996}},
      {"T1-caseVI",
       "First test, design (i), estimated p, cross-validated h_x",
       {"rho=0 cv", "rho=0.25 cv", "rho=0.5 cv"},
       {1000, 2000},
       {0.05, 0.10},
       {0.06, 0.325, 0.842, 0.04, 0.565, 0.991, 0.13, 0.426, 0.908, 0.104, 0.673, 0.997}},
      {"T1-caseVII",
       "First test, misspecification, design (i), rho=0",
       {"g1=0.25 cv", "g1=0.5 cv"},
       {1000, 2000},
       {0.05, 0.10},
       {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0}},
      {"T1-caseVIII",
       "First test, misspecification, design (ii), rho=0",
       {"g1=0.25 cv", "g1=0.5 cv"},
       {1000, 2000},
       {0.05, 0.10},
       {0.997, 1.0, 1.0, 1.0, 0.999, 1.0, 1.0, 1.0}},
      {"T2-caseI*",
       "Second test, design (i) N(0,0.5), gamma1=0, rho=0.25, oracle p",
       {"d=.95/hp=.075 c=3.5", "d=.95/hp=.075 c=4", "d=.95/hp=.075 c=4.5", "d=.95/hp=.05 c=3.5", "d=.95/hp=.05 c=4", "d=.95/hp=.05 c=4.5", "d=.975/hp=.03 c=3.5", "d=.975/hp=.03 c=4", "d=.975/hp=.03 c=4.5", "d=.98/hp=.02 c=3.5", "d=.98/hp=.02 c=4", "d=.98/hp=.02 c=4.5", "data-driven"},
       {1000, 2000},
       {0.05, 0.10},
       {0.067, 0.076, 0.067, 0.066, 0.06, 0.067, 0.079, 0.07, 0.08, 0.075, 0.083, 0.089, 0.076, 0.088, 0.129, 0.131, 0.121, 0.096, 0.105, 0.102, 0.08, 0.072, 0.068, 0.08, 0.078, 0.0831, 0.113, 0.112, 0.124, 0.112, 0.111, 0.118, 0.125, 0.12, 0.122, 0.141, 0.14, 0.143, 0.115, 0.215, 0.21, 0.227, 0.174, 0.167, 0.169, 0.124, 0.127, 0.129, 0.138, 0.144, 0.141, 0.14}},
      {"T2-caseII*",
       "Second test, design (i) N(0,0.5), gamma1=0.25, rho=0.25, oracle p",
       {"d=.95/hp=.075 c=3.5", "d=.95/hp=.075 c=4", "d=.95/hp=.075 c=4.5", "d=.95/hp=.05 c=3.5", "d=.95/hp=.05 c=4", "d=.95/hp=.05 c=4.5", "d=.975/hp=.03 c=3.5", "d=.975/hp=.03 c=4", "d=.975/hp=.03 c=4.5", "d=.98/hp=.02 c=3.5", "d=.98/hp=.02 c=4", "d=.98/hp=.02 c=4.5", "data-driven"},
       {1000, 2000},
       {0.05, 0.10},
       {0.998, 0.998, 0.997, 0.991, 0.987, 0.986, 0.875, 0.858, 0.876, 0.761, 0.777, 0.805, 0.821, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.999, 0.999, 0.998, 0.984, 0.988, 0.986, 0.857, 0.998, 0.999, 0.998, 0.994, 0.993, 0.994, 0.924, 0.922, 0.922, 0.884, 0.882, 0.879, 0.888, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.996, 0.996, 0.995, 0.927}},
      {"T2-caseIII*",
       "Second test, design (i) N(0,0.5), gamma1=0.5, rho=0.25, oracle p",
       {"d=.95/hp=.075 c=3.5", "d=.95/hp=.075 c=4", "d=.95/hp=.075 c=4.5", "d=.95/hp=.05 c=3.5", "d=.95/hp=.05 c=4", "d=.95/hp=.05 c=4.5", "d=.975/hp=.03 c=3.5", "d=.975/hp=.03 c=4", "d=.975/hp=.03 c=4.5", "d=.98/hp=.02 c=3.5", "d=.98/hp=.02 c=4", "d=.98/hp=.02 c=4.5", "data-driven"},
       {1000, 2000},
       {0.05, 0.10},
       {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.998, 0.998, 0.997, 0.967, 0.973, 0.98, 0.993, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.981, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.995, 0.995, 0.995, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.994}},
      {"T2-caseIV*",
       "Second test, design (ii), sigma=0.5, gamma1=0, rho=0.25, oracle p",
       {"d=.95/hp=.075 c=3.5", "d=.95/hp=.075 c=4", "d=.95/hp=.075 c=4.5", "d=.95/hp=.05 c=3.5", "d=.95/hp=.05 c=4", "d=.95/hp=.05 c=4.5", "data-driven"},
       {1000, 2000},
       {0.05, 0.10},
       {0.005, 0.003, 0.004, 0.007, 0.005, 0.005, 0.001, 0.002, 0.002, 0.003, 0.001, 0.003, 0.003, 0.003, 0.013, 0.009, 0.012, 0.01, 0.007, 0.012, 0.008, 0.011, 0.014, 0.015, 0.011, 0.009, 0.006, 0.011}},
      {"T2-caseV*",
       "Second test, design (ii), sigma=0.5, gamma1=0.25, rho=0.25, oracle p",
       {"d=.95/hp=.075 c=3.5", "d=.95/hp=.075 c=4", "d=.95/hp=.075 c=4.5", "d=.95/hp=.05 c=3.5", "d=.95/hp=.05 c=4", "d=.95/hp=.05 c=4.5", "data-driven"},
       {1000, 2000},
       {0.05, 0.10},
       {0.177, 0.156, 0.184, 0.084, 0.088, 0.078, 0.209, 0.536, 0.554, 0.518, 0.271, 0.25, 0.253, 0.472, 0.256, 0.278, 0.291, 0.129, 0.13, 0.15, 0.35, 0.721, 0.716, 0.72, 0.425, 0.421, 0.424, 0.641}},
      {"T2-caseVI*",
       "Second test, design (ii), sigma=0.5, gamma1=0.5, rho=0.25, oracle p",
       {"d=.95/hp=.075 c=3.5", "d=.95/hp=.075 c=4", "d=.95/hp=.075 c=4.5", "d=.95/hp=.05 c=3.5", "d=.95/hp=.05 c=4", "d=.95/hp=.05 c=4.5", "data-driven"},
       {1000, 2000},
       {0.05, 0.10},
       {0.779, 0.739, 0.76, 0.457, 0.472, 0.438, 0.612, 1.0, 0.997, 0.998, 0.899, 0.915, 0.91, 0.996, 0.868, 0.864, 0.87, 0.571, 0.573, 0.588, 0.679, 1.0, 1.0, 0.999, 0.96, 0.962, 0.962, 1.0}},
      {"S1-caseI",
       "Conditional mean test, design (i), oracle p",
       {"rho=0 c=0.125", "rho=0 c=0.25", "rho=0 c=0.5", "rho=0.25 c=0.125", "rho=0.25 c=0.25", "rho=0.25 c=0.5", "rho=0.5 c=0.125", "rho=0.5 c=0.25", "rho=0.5 c=0.5"},
       {400, 1000},
       {0.05, 0.10},
       {0.073, 0.061, 0.056, 0.204, 0.179, 0.238, 0.455, 0.535, 0.568, 0.054, 0.046, 0.053, 0.355, 0.35, 0.414, 0.917, 0.931, 0.905, 0.142, 0.126, 0.117, 0.302, 0.298, 0.355, 0.648, 0.662, 0.709, 0.118, 0.094, 0.098, 0.459, 0.48, 0.537, 0.957, 0.966, 0.96}},
      {"S1-caseII",
       "Conditional mean test, design (ii), oracle p",
       {"rho=0 c=0.125", "rho=0 c=0.25", "rho=0 c=0.5", "rho=0.25 c=0.125", "rho=0.25 c=0.25", "rho=0.25 c=0.5", "rho=0.5 c=0.125", "rho=0.5 c=0.25", "rho=0.5 c=0.5"},
       {400, 1000},
       {0.05, 0.10},
       {0.067, 0.072, 0.084, 0.115, 0.143, 0.164, 0.369, 0.435, 0.384, 0.047, 0.04, 0.052, 0.224, 0.215, 0.299, 0.77, 0.702, 0.73, 0.129, 0.126, 0.163, 0.211, 0.224, 0.244, 0.487, 0.53, 0.499, 0.102, 0.112, 0.108, 0.337, 0.346, 0.39, 0.826, 0.792, 0.815}},
      {"S1-caseIII",
       "Conditional mean test, design (iii), oracle p",
       {"rho=0 c=0.125", "rho=0 c=0.25", "rho=0 c=0.5", "rho=0.25 c=0.125", "rho=0.25 c=0.25", "rho=0.25 c=0.5", "rho=0.5 c=0.125", "rho=0.5 c=0.25", "rho=0.5 c=0.5"},
       {400, 1000},
       {0.05, 0.10},
       {0.051, 0.043, 0.055, 0.153, 0.168, 0.211, 0.545, 0.585, 0.56, 0.044, 0.032, 0.038, 0.393, 0.377, 0.358, 0.908, 0.903, 0.911, 0.103, 0.09, 0.129, 0.265, 0.279, 0.305, 0.647, 0.675, 0.699, 0.11, 0.081, 0.092, 0.501, 0.518, 0.484, 0.954, 0.946, 0.953}},
      {"S1-caseIV",
       "Conditional mean test, design (iv), oracle p",
       {"rho=0 c=0.125", "rho=0 c=0.25", "rho=0 c=0.5", "rho=0.25 c=0.125", "rho=0.25 c=0.25", "rho=0.25 c=0.5", "rho=0.5 c=0.125", "rho=0.5 c=0.25", "rho=0.5 c=0.5"},
       {400, 1000},
       {0.05, 0.10},
       {0.077, 0.059, 0.056, 0.218, 0.218, 0.239, 0.606, 0.587, 0.586, 0.061, 0.074, 0.062, 0.396, 0.465, 0.422, 0.964, 0.967, 0.948, 0.134, 0.118, 0.117, 0.316, 0.339, 0.349, 0.714, 0.674, 0.709, 0.111, 0.122, 0.146, 0.531, 0.577, 0.583, 0.984, 0.989, 0.98}},
      {"S1-caseV",
       "Conditional mean test, design (i), estimated p",
       {"rho=0 c=0.125", "rho=0 c=0.25", "rho=0 c=0.5", "rho=0.25 c=0.125", "rho=0.25 c=0.25", "rho=0.25 c=0.5", "rho=0.5 c=0.125", "rho=0.5 c=0.25", "rho=0.5 c=0.5"},
       {400, 1000},
       {0.05, 0.10},
       {0.073, 0.068, 0.071, 0.172, 0.177, 0.178, 0.536, 0.526, 0.64, 0.056, 0.039, 0.04, 0.349, 0.343, 0.405, 0.916, 0.911, 0.918, 0.128, 0.132, 0.152, 0.28, 0.295, 0.287, 0.66, 0.686, 0.73, 0.12, 0.102, 0.093, 0.462, 0.438, 0.512, 0.954, 0.955, 0.969}},
      {"S1-caseVI",
       "Conditional mean test, design (ii), estimated p",
       {"rho=0 c=0.125", "rho=0 c=0.25", "rho=0 c=0.5", "rho=0.25 c=0.125", "rho=0.25 c=0.25", "rho=0.25 c=0.5", "rho=0.5 c=0.125", "rho=0.5 c=0.25", "rho=0.5 c=0.5"},
       {400, 1000},
       {0.05, 0.10},
       {0.066, 0.053, 0.064, 0.16, 0.134, 0.142, 0.375, 0.35, 0.375, 0.049, 0.063, 0.046, 0.212, 0.211, 0.229, 0.718, 0.695, 0.712, 0.111, 0.124, 0.132, 0.22, 0.197, 0.225, 0.474, 0.453, 0.488, 0.082, 0.1, 0.096, 0.329, 0.303, 0.338, 0.811, 0.808, 0.808}},
  };
  return tables;
}

}  // namespace selectest
