from django.urls import path

from .controllers import capacity as capacity_ctrl

urlpatterns = [
    path('solve/', capacity_ctrl.solve_view, name='solve'),
    path('region/', capacity_ctrl.region_view, name='region'),
    path('kkt/', capacity_ctrl.kkt_view, name='kkt'),
]
