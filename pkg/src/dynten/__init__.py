"""dynten: tensor-decomposition embeddings for discrete-time dynamic networks."""

from .clustering import (ClusterState, anomaly_scores, assign_clusters,
                         classify_anomalies, kmeans, streaming_update,
                         suggest_threshold)
from .embed import (DynEmbedConfig, DynEmbedResult, TemporalWeights,
                    adj_last_embedding, adj_wt_embedding, convolve_snapshots,
                    dynacpd_embed, dynamic_embedding, dynaocpd_embed,
                    make_weights, precondition, res_last_embedding,
                    res_wt_embedding, weighted_modes)
from .graphs import (ConvergenceError, DynamicNetwork, ReducibleChainError,
                     Snapshot, adjacency_matrix, align_snapshots,
                     degree_matrix, katz_adjacency, katz_omega_bound,
                     laplacian, normalized_laplacian, spectral_radius,
                     stationary_vector, symmetric_directed_laplacian,
                     symmetrized_adjacency, transition_matrix)
from .io import (load_cp_model, load_dynamic_network, load_embedding_csv,
                 save_cp_model, write_dynamic_network, write_embedding_csv)
from .linkpred import (EdgeSample, LogisticModel, auc_roc, average_precision,
                       evaluate_link_prediction, fit_logistic_l1,
                       hadamard_separation, l2_separation, predict_scores,
                       sample_training_set)
from .spectral import (EigenPairs, adjacency_embedding, bottom_k_eigs,
                       effective_resistance, resistance_embedding, top_k_eigs)
from .synth import dynamic_er, dynamic_sbm, sbm_matched_er
from .tensors import (AlsConfig, CPModel, DecompositionError, SparseTensor3,
                      cp_als, from_snapshots, mttkrp, ocp_als,
                      reconstruct_error, submodel)

__version__ = "0.1.0"
