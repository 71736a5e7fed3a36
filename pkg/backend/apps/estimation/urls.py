"""
Estimation URL configuration
"""
from django.urls import path, include
from rest_framework.routers import DefaultRouter
from backend.apps.estimation.views import (
    EstimateViewSet,
    PopulationViewSet,
    SimulationViewSet,
    TableViewSet,
    WeightsViewSet,
)

router = DefaultRouter()
router.register(r'populations', PopulationViewSet, basename='population')
router.register(r'tables', TableViewSet, basename='table')
router.register(r'weights', WeightsViewSet, basename='weights')
router.register(r'estimates', EstimateViewSet, basename='estimates')
router.register(r'simulations', SimulationViewSet, basename='simulation')

urlpatterns = [
    path('', include(router.urls)),
]
